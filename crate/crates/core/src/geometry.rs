//! Small fixed-size vector helpers. Points are stored as `[f64; 3]` with a zero
//! third coordinate in two dimensions.

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(s: f64, a: &Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn det2(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    dot(a, &cross(b, c))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Signed volume of an n-simplex given its n+1 vertices (n = 1, 2, 3).
/// For n smaller than the ambient dimension the unsigned measure is returned.
pub fn simplex_measure(pts: &[Vec3], ambient: usize) -> f64 {
    let n = pts.len() - 1;
    match (n, ambient) {
        (0, _) => 1.0,
        (1, _) => norm(&sub(&pts[1], &pts[0])),
        (2, 2) => det2(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0])) / 2.0,
        (2, 3) => norm(&cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]))) / 2.0,
        (3, 3) => {
            det3(
                &sub(&pts[1], &pts[0]),
                &sub(&pts[2], &pts[0]),
                &sub(&pts[3], &pts[0]),
            ) / factorial(3)
        }
        _ => panic!("simplex of dimension {n} in R^{ambient}"),
    }
}

/// Gradients of the barycentric coordinates of a full-dimensional simplex,
/// together with its signed volume.
pub fn barycentric_gradients(pts: &[Vec3], dim: usize) -> (Vec<Vec3>, f64) {
    let mut grads = vec![[0.0; 3]; dim + 1];
    match dim {
        2 => {
            let e1 = sub(&pts[1], &pts[0]);
            let e2 = sub(&pts[2], &pts[0]);
            let det = det2(&e1, &e2);
            // rows of the inverse of [e1 e2]
            grads[1] = [e2[1] / det, -e2[0] / det, 0.0];
            grads[2] = [-e1[1] / det, e1[0] / det, 0.0];
            grads[0] = [-grads[1][0] - grads[2][0], -grads[1][1] - grads[2][1], 0.0];
            (grads, det / 2.0)
        }
        3 => {
            let e1 = sub(&pts[1], &pts[0]);
            let e2 = sub(&pts[2], &pts[0]);
            let e3 = sub(&pts[3], &pts[0]);
            let det = det3(&e1, &e2, &e3);
            grads[1] = scale(1.0 / det, &cross(&e2, &e3));
            grads[2] = scale(1.0 / det, &cross(&e3, &e1));
            grads[3] = scale(1.0 / det, &cross(&e1, &e2));
            let s = add(&add(&grads[1], &grads[2]), &grads[3]);
            grads[0] = scale(-1.0, &s);
            (grads, det / 6.0)
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Point from barycentric coordinates.
pub fn from_barycentric(pts: &[Vec3], bary: &[f64]) -> Vec3 {
    let mut x = [0.0; 3];
    for (p, &l) in pts.iter().zip(bary) {
        x[0] += l * p[0];
        x[1] += l * p[1];
        x[2] += l * p[2];
    }
    x
}

/// Barycentric coordinates of `x` with respect to a full-dimensional simplex.
pub fn to_barycentric(pts: &[Vec3], dim: usize, x: &Vec3) -> Vec<f64> {
    let (grads, _) = barycentric_gradients(pts, dim);
    let d = sub(x, &pts[0]);
    let mut b = vec![0.0; dim + 1];
    let mut s = 0.0;
    for i in 1..=dim {
        b[i] = dot(&grads[i], &d);
        s += b[i];
    }
    b[0] = 1.0 - s;
    b
}

/// Largest edge length of a simplex.
pub fn diameter(pts: &[Vec3]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            h = h.max(norm(&sub(&pts[i], &pts[j])));
        }
    }
    h
}

/// Ratio of circumradius to inradius for a triangle or tetrahedron.
pub fn shape_ratio(pts: &[Vec3], dim: usize) -> f64 {
    let vol = simplex_measure(pts, dim).abs();
    match dim {
        2 => {
            let a = norm(&sub(&pts[1], &pts[2]));
            let b = norm(&sub(&pts[0], &pts[2]));
            let c = norm(&sub(&pts[0], &pts[1]));
            let r_out = a * b * c / (4.0 * vol);
            let r_in = 2.0 * vol / (a + b + c);
            r_out / r_in
        }
        3 => {
            let mut area = 0.0;
            for skip in 0..4 {
                let f: Vec<Vec3> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
                area += simplex_measure(&f, 3);
            }
            let r_in = 3.0 * vol / area;
            // circumcenter solves 2 (p_i - p_0) . c = |p_i|^2 - |p_0|^2
            let e1 = sub(&pts[1], &pts[0]);
            let e2 = sub(&pts[2], &pts[0]);
            let e3 = sub(&pts[3], &pts[0]);
            let det = det3(&e1, &e2, &e3);
            let (l1, l2, l3) = (dot(&e1, &e1), dot(&e2, &e2), dot(&e3, &e3));
            let num = add(
                &add(&scale(l1, &cross(&e2, &e3)), &scale(l2, &cross(&e3, &e1))),
                &scale(l3, &cross(&e1, &e2)),
            );
            let r_out = norm(&num) / (2.0 * det.abs());
            r_out / r_in
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}
