use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{convex_hull, ConvexPolytope, Degeneracy, Vec2};
use crate::error::{Error, Result};

/// Serialized form of a polytope: vertex list plus dimension tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub vertices: Vec<[f64; 2]>,
    pub degeneracy: Degeneracy,
}

impl From<&ConvexPolytope> for PolytopeJson {
    fn from(p: &ConvexPolytope) -> Self {
        Self {
            vertices: p.vertices().iter().map(|v| [v.x, v.y]).collect(),
            degeneracy: p.degeneracy(),
        }
    }
}

impl TryFrom<PolytopeJson> for ConvexPolytope {
    type Error = Error;

    /// Rebuilds the hull and checks the stored tag against it.
    fn try_from(j: PolytopeJson) -> Result<Self> {
        let pts: Vec<Vec2> = j.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
        let p = convex_hull(&pts)?;
        if p.degeneracy() != j.degeneracy {
            return Err(Error::Config(format!(
                "polytope tagged {:?} but vertices span a {:?}",
                j.degeneracy,
                p.degeneracy()
            )));
        }
        Ok(p)
    }
}

impl ConvexPolytope {
    /// Header-less `x1,x2` rows, one vertex per line, in boundary order.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.len() * 48);
        for v in self.vertices() {
            let _ = writeln!(s, "{:e},{:e}", v.x, v.y);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(',').map(|f| f.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => pts.push(Vec2::new(x, y)),
                _ => return Err(Error::Config(format!("line {}: expected `x1,x2`", n + 1))),
            }
        }
        convex_hull(&pts)
    }

    pub fn to_json(&self) -> PolytopeJson {
        PolytopeJson::from(self)
    }
}
