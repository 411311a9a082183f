//! Plain-text operator dumps: `row,col,value` triplets (1-based) and the load vector.

use std::io::{self, Write};

use super::SpatialOperator;

pub fn write_triplets(op: &SpatialOperator, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "row,col,value")?;
    for (i, j, v) in op.matrix.triplets() {
        writeln!(out, "{},{},{:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_load(op: &SpatialOperator, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "row,value")?;
    for (i, v) in op.load.iter().enumerate() {
        writeln!(out, "{},{:e}", i + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitted_fvm::assemble_nd;
    use crate::mesh::TensorMesh;
    use crate::problem::ConstantProblem;

    #[test]
    fn triplets_round_trip() {
        let mesh = TensorMesh::uniform(&[(0.0, 1.0)], &[4]).unwrap();
        let op = assemble_nd(&ConstantProblem::new(1), &mesh, 0.0, &[0.0; 3]).unwrap();
        let mut buf = Vec::new();
        write_triplets(&op, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("row,col,value"));
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            let v: f64 = f[2].parse().unwrap();
            assert_eq!(op.matrix.get(i - 1, j - 1), v);
        }
        let mut buf = Vec::new();
        write_load(&op, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
