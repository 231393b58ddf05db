//! Callable k-forms given through their proxy fields, and the pointwise
//! operations (d, δ, traces) realized on proxies in two and three dimensions.
//!
//! Proxies: 0- and n-forms are scalars (stored in slot 0), 1-forms are vectors
//! `v·dx`, and 2-forms in three dimensions are flux vectors `w1 dy∧dz + w2 dz∧dx + w3 dx∧dy`.

use std::sync::Arc;

use crate::geometry::{cross, dot, Vec3};

pub type ProxyFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
/// `J[i][j] = ∂_j v_i` for the proxy components `v_i`.
pub type JacobianFn = Arc<dyn Fn(&Vec3) -> [Vec3; 3] + Send + Sync>;

/// Number of proxy components of a `k`-form in `n` dimensions.
pub fn n_components(k: usize, n: usize) -> usize {
    if k == 0 || k == n {
        1
    } else {
        n
    }
}

#[derive(Clone)]
pub struct FormField {
    pub k: usize,
    pub value: ProxyFn,
    pub jacobian: Option<JacobianFn>,
}

impl std::fmt::Debug for FormField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FormField").field("k", &self.k).field("jacobian", &self.jacobian.is_some()).finish()
    }
}

impl FormField {
    pub fn new(k: usize, value: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        FormField { k, value: Arc::new(value), jacobian: None }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&Vec3) -> [Vec3; 3] + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn constant(k: usize, c: Vec3) -> Self {
        FormField::new(k, move |_| c).with_jacobian(|_| [[0.0; 3]; 3])
    }

    pub fn zero(k: usize) -> Self {
        Self::constant(k, [0.0; 3])
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        (self.value)(x)
    }
}

/// Proxy of `d v` for a `k`-form with the given Jacobian.
pub fn exterior_derivative(k: usize, n: usize, j: &[Vec3; 3]) -> Vec3 {
    match (k, n) {
        (0, _) => j[0],
        (1, 2) => [j[1][0] - j[0][1], 0.0, 0.0],
        (1, 3) => [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]],
        (2, 3) => [j[0][0] + j[1][1] + j[2][2], 0.0, 0.0],
        _ => [0.0; 3],
    }
}

/// Proxy of the coderivative `δ g` of a `k`-form, the formal adjoint of `d`.
pub fn codifferential(k: usize, n: usize, j: &[Vec3; 3]) -> Vec3 {
    match (k, n) {
        (1, _) => [-(j[0][0] + j[1][1] + j[2][2]), 0.0, 0.0],
        (2, 2) => [j[0][1], -j[0][0], 0.0],
        (2, 3) => [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]],
        (3, 3) => [-j[0][0], -j[0][1], -j[0][2]],
        _ => [0.0; 3],
    }
}

/// Face quantity whose jump enters the residual of a `k`-form field: normal
/// component for 1-forms, the full scalar for n-forms, `w × ν` for 2-forms in 3D.
pub fn trace_quantity(k: usize, n: usize, v: &Vec3, normal: &Vec3) -> Vec3 {
    match (k, n) {
        (1, _) => [dot(v, normal), 0.0, 0.0],
        (2, 2) | (3, 3) => [v[0], 0.0, 0.0],
        (2, 3) => cross(v, normal),
        _ => [0.0; 3],
    }
}

/// Number of meaningful components in [`trace_quantity`].
pub fn trace_components(k: usize, n: usize) -> usize {
    if k == 2 && n == 3 {
        3
    } else {
        1
    }
}
