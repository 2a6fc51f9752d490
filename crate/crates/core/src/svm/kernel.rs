use serde::{Deserialize, Serialize};

use super::SvmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Gaussian,
    Polynomial { degree: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub scale: f64,
}

impl KernelSpec {
    pub fn linear(scale: f64) -> Self {
        Self { kind: KernelKind::Linear, scale }
    }

    pub fn gaussian(scale: f64) -> Self {
        Self { kind: KernelKind::Gaussian, scale }
    }

    pub fn polynomial(degree: u32, scale: f64) -> Self {
        Self {
            kind: KernelKind::Polynomial { degree },
            scale,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(SvmError::InvalidKernel(format!("scale must be positive, got {}", self.scale)));
        }
        if let KernelKind::Polynomial { degree } = self.kind {
            if !(2..=4).contains(&degree) {
                return Err(SvmError::InvalidKernel(format!("polynomial degree {degree} not in 2..=4")));
            }
        }
        Ok(())
    }

    /// Kernel value; assumes a validated spec.
    #[inline]
    pub fn eval(&self, a: &[f64; 2], b: &[f64; 2]) -> f64 {
        let s2 = self.scale * self.scale;
        match self.kind {
            KernelKind::Linear => (a[0] * b[0] + a[1] * b[1]) / s2,
            KernelKind::Gaussian => {
                let d0 = a[0] - b[0];
                let d1 = a[1] - b[1];
                (-(d0 * d0 + d1 * d1) / (2.0 * s2)).exp()
            }
            KernelKind::Polynomial { degree } => (1.0 + (a[0] * b[0] + a[1] * b[1]) / s2).powi(degree as i32),
        }
    }

    /// Row-major Gram matrix of `rows`.
    pub(crate) fn gram(&self, rows: &[[f64; 2]]) -> Vec<f64> {
        let n = rows.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&rows[i], &rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

pub fn kernel_eval(a: &[f64; 2], b: &[f64; 2], spec: &KernelSpec) -> Result<f64, SvmError> {
    spec.validate()?;
    if !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
        return Err(SvmError::NonFiniteFeature);
    }
    Ok(spec.eval(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(kernel_eval(&[0.3, -2.0], &[0.3, -2.0], &KernelSpec::gaussian(0.7)).unwrap(), 1.0);
        assert_eq!(kernel_eval(&[1.0, 2.0], &[3.0, 4.0], &KernelSpec::linear(1.0)).unwrap(), 11.0);
        assert_eq!(kernel_eval(&[1.0, 0.0], &[1.0, 0.0], &KernelSpec::polynomial(2, 1.0)).unwrap(), 4.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(kernel_eval(&[0.0; 2], &[0.0; 2], &KernelSpec::linear(0.0)).is_err());
        assert!(kernel_eval(&[0.0; 2], &[0.0; 2], &KernelSpec::gaussian(-1.0)).is_err());
        assert!(kernel_eval(&[0.0; 2], &[0.0; 2], &KernelSpec::polynomial(5, 1.0)).is_err());
        assert!(kernel_eval(&[f64::NAN, 0.0], &[0.0; 2], &KernelSpec::linear(1.0)).is_err());
    }

    #[test]
    fn serde_shape() {
        let s = serde_json::to_string(&KernelSpec::polynomial(3, 0.5)).unwrap();
        assert_eq!(s, r#"{"kind":"polynomial","degree":3,"scale":0.5}"#);
        let back: KernelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, KernelSpec::polynomial(3, 0.5));
    }

    fn any_spec() -> impl Strategy<Value = KernelSpec> {
        (0u32..5, 0.1f64..5.0).prop_map(|(k, s)| match k {
            0 => KernelSpec::linear(s),
            1 => KernelSpec::gaussian(s),
            d => KernelSpec::polynomial(d, s),
        })
    }

    proptest! {
        #[test]
        fn symmetric(spec in any_spec(), a in prop::array::uniform2(-20.0f64..20.0), b in prop::array::uniform2(-20.0f64..20.0)) {
            prop_assert_eq!(spec.eval(&a, &b), spec.eval(&b, &a));
        }
    }
}
