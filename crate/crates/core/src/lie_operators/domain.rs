use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{hyperbolic_distance, GroupElement, PlanePoint};
use crate::quadrature::Rule;

/// Geodesic disc {z : d(z, center) <= radius}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: PlanePoint,
    pub radius: f64,
}

/// Rectangle in (x, y).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum FactorRegion {
    Disc(Disc),
    Box(FactorBox),
}

/// Node counts of one factor's rule.
///
/// Discs: `panels x per_panel` Gauss nodes in the radius, `angular` trapezoid nodes
/// around the circle. Boxes: `panels x per_panel` Gauss nodes in x and in log y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionResolution {
    pub panels: usize,
    pub per_panel: usize,
    pub angular: usize,
}

/// A compact product region with a quadrature rule for dx dy / y^2 in each factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub factors: Vec<FactorRegion>,
    pub resolution: Vec<RegionResolution>,
}

impl FactorRegion {
    pub fn covers(&self, disc: &Disc) -> bool {
        match self {
            FactorRegion::Disc(own) => hyperbolic_distance(own.center, disc.center) + disc.radius <= own.radius + 1e-12,
            FactorRegion::Box(b) => {
                let (c, rho) = (disc.center, disc.radius);
                let half = c.y * rho.sinh();
                c.x - half >= b.x0 && c.x + half <= b.x1 && c.y * (-rho).exp() >= b.y0 && c.y * rho.exp() <= b.y1
            }
        }
    }

    /// Nodes and Haar weights.
    pub fn nodes(&self, res: &RegionResolution) -> (Vec<PlanePoint>, Vec<f64>) {
        match self {
            FactorRegion::Disc(disc) => {
                let radial = Rule::composite_gauss(0.0, disc.radius, res.panels, res.per_panel);
                let angular = Rule::periodic_trapezoid(0.0, PI, res.angular);
                let to_center = GroupElement::p(disc.center);
                let mut pts = Vec::with_capacity(radial.len() * angular.len());
                let mut wts = Vec::with_capacity(radial.len() * angular.len());
                for (t, wt) in radial.nodes.iter().zip(&radial.weights) {
                    for (th, wth) in angular.nodes.iter().zip(&angular.weights) {
                        pts.push(to_center.act(PlanePoint::polar(*t, *th)));
                        wts.push(2.0 * t.sinh() * wt * wth);
                    }
                }
                (pts, wts)
            }
            FactorRegion::Box(b) => {
                let xr = Rule::composite_gauss(b.x0, b.x1, res.panels, res.per_panel);
                let ur = Rule::composite_gauss(b.y0.ln(), b.y1.ln(), res.panels, res.per_panel);
                let mut pts = Vec::with_capacity(xr.len() * ur.len());
                let mut wts = Vec::with_capacity(xr.len() * ur.len());
                for (x, wx) in xr.nodes.iter().zip(&xr.weights) {
                    for (u, wu) in ur.nodes.iter().zip(&ur.weights) {
                        let y = u.exp();
                        pts.push(PlanePoint { x: *x, y });
                        wts.push(wx * wu / y);
                    }
                }
                (pts, wts)
            }
        }
    }
}

impl Domain {
    pub fn new(factors: Vec<FactorRegion>, resolution: Vec<RegionResolution>) -> Self {
        assert_eq!(factors.len(), resolution.len(), "one resolution per factor");
        Domain { factors, resolution }
    }

    pub fn disc(center: PlanePoint, radius: f64, res: RegionResolution) -> Self {
        Domain::new(vec![FactorRegion::Disc(Disc { center, radius })], vec![res])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factor_nodes(&self) -> Vec<(Vec<PlanePoint>, Vec<f64>)> {
        self.factors.iter().zip(&self.resolution).map(|(f, r)| f.nodes(r)).collect()
    }

    pub fn covers(&self, support: &[Disc]) -> Option<usize> {
        self.factors.iter().zip(support).position(|(f, d)| !f.covers(d))
    }
}
