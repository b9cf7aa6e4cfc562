use crate::error::{invalid, Result};

/// A circular arc traversed from angle `start` through `sweep` radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Arc {
    pub center: [f64; 2],
    pub radius: f64,
    pub start: f64,
    pub sweep: f64,
}

impl Arc {
    pub fn length(&self) -> f64 {
        self.radius * self.sweep.abs()
    }

    /// Point at fraction `u` of the arc.
    pub fn at(&self, u: f64) -> [f64; 2] {
        let a = self.start + u * self.sweep;
        [
            self.center[0] + self.radius * a.cos(),
            self.center[1] + self.radius * a.sin(),
        ]
    }
}

/// Closed planar curve: two lobes of radius `lobe` centred at `(+-c, 0)` joined by neck
/// arcs of radius `smoothing` centred at `(0, +-(neck + smoothing))`, each tangent to both
/// lobes. The narrowest gap is `2 neck`, attained at `(0, +-neck)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dumbbell {
    pub arcs: [Arc; 4],
    pub lobe_center: f64,
}

impl Dumbbell {
    pub fn new(lobe: f64, neck: f64, smoothing: f64) -> Result<Self> {
        for (name, v) in [("lobe", lobe), ("neck", neck), ("smoothing", smoothing)] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("dumbbell {name} must be positive, got {v}"));
            }
        }
        if neck >= lobe {
            return invalid(format!("dumbbell neck {neck} must be below the lobe radius {lobe}"));
        }
        let h = neck + smoothing;
        let c = ((lobe + smoothing).powi(2) - h * h).sqrt();
        // Angle of the upper tangent point seen from the right lobe centre.
        let alpha = h.atan2(-c);
        // Angle of the right tangent point seen from the upper neck centre.
        let beta = (-h).atan2(c);
        let pi = std::f64::consts::PI;
        let arcs = [
            Arc {
                center: [c, 0.0],
                radius: lobe,
                start: -alpha,
                sweep: 2.0 * alpha,
            },
            // Upper neck, right to left through its lowest point.
            Arc {
                center: [0.0, h],
                radius: smoothing,
                start: beta,
                sweep: -(pi + 2.0 * beta),
            },
            Arc {
                center: [-c, 0.0],
                radius: lobe,
                start: pi - alpha,
                sweep: 2.0 * alpha,
            },
            // Lower neck, left to right through its highest point.
            Arc {
                center: [0.0, -h],
                radius: smoothing,
                start: pi + beta,
                sweep: -(pi + 2.0 * beta),
            },
        ];
        Ok(Dumbbell {
            arcs,
            lobe_center: c,
        })
    }

    pub fn length(&self) -> f64 {
        self.arcs.iter().map(Arc::length).sum()
    }

    /// Point at arc length `s` in `[0, length)`.
    pub fn at(&self, mut s: f64) -> [f64; 2] {
        for arc in &self.arcs {
            let l = arc.length();
            if s < l {
                return arc.at(s / l);
            }
            s -= l;
        }
        let last = self.arcs[3];
        last.at(1.0)
    }
}
