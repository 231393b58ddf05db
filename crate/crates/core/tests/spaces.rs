use feec_core::forms::{exterior_derivative as d_proxy, n_components};
use feec_core::geometry::{cross, dot, from_barycentric, sub, Vec3};
use feec_core::mesh::{generate_structured, Domain, GammaSelector, SimplicialMesh};
use feec_core::quadrature::simplex_rule;
use feec_core::spaces::{
    canonical_interpolate, clement_interpolate, exterior_derivative, quasi_interpolate_pih, CellGeometry,
    DiscreteField, Family, FormSpace,
};
use std::collections::HashSet;

fn square(m: usize) -> SimplicialMesh {
    generate_structured(Domain::UnitSquare, m).unwrap()
}

fn cube(m: usize) -> SimplicialMesh {
    generate_structured(Domain::UnitCube, m).unwrap()
}

/// Exact rank by fraction-free elimination over i128.
fn integer_rank(rows: usize, cols: usize, entries: &[(usize, usize, i64)]) -> usize {
    let mut a = vec![vec![0i128; cols]; rows];
    for &(i, j, v) in entries {
        a[i][j] += v as i128;
    }
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&r| a[r][col] != 0) else { continue };
        a.swap(rank, p);
        for r in 0..rows {
            if r != rank && a[r][col] != 0 {
                let (f, g) = (a[r][col], a[rank][col]);
                for c in 0..cols {
                    a[r][c] = a[r][c] * g - a[rank][c] * f;
                }
                let gcd = a[r].iter().fold(0i128, |x, &y| num_gcd(x, y.abs()));
                if gcd > 1 {
                    a[r].iter_mut().for_each(|v| *v /= gcd);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn num_gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

#[test]
fn build_space_examples() {
    let c1 = cube(1);
    assert_eq!(FormSpace::new(&c1, 1, Family::TrimmedP1, false).unwrap().n_dofs(), 19);
    let s1 = square(1).mark_gamma(&GammaSelector::WholeBoundary).unwrap();
    let p1 = FormSpace::new(&s1, 0, Family::LagrangeP1, true).unwrap();
    assert_eq!(p1.n_dofs(), 4);
    assert!(p1.constrained().iter().all(|&c| c));
    let c2 = cube(2);
    assert_eq!(FormSpace::new(&c2, 3, Family::PiecewiseP0, false).unwrap().n_dofs(), c2.n_cells());
    assert!(FormSpace::new(&c2, 1, Family::PiecewiseP0, false).is_err());
    assert!(FormSpace::new(&c2, 1, Family::LagrangeP1, false).is_err());
}

#[test]
fn single_triangle_gradient_incidence() {
    let mesh = SimplicialMesh::from_cells(
        2,
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        &[vec![0, 1, 2]],
        &HashSet::new(),
    )
    .unwrap();
    let d0 = exterior_derivative(&FormSpace::new(&mesh, 0, Family::TrimmedP1, false).unwrap()).unwrap();
    assert_eq!((d0.nrows, d0.ncols), (3, 3));
    for i in 0..3 {
        let s: i64 = (d0.indptr[i]..d0.indptr[i + 1]).map(|p| d0.values[p] as i64).sum();
        assert_eq!(s, 0);
    }
}

#[test]
fn complex_property_exact() {
    for mesh in [square(1), square(2), square(4), cube(1), cube(2), cube(3)] {
        let n = mesh.dim();
        for k in 0..n - 1 {
            let dk = exterior_derivative(&FormSpace::new(&mesh, k, Family::TrimmedP1, false).unwrap()).unwrap();
            let dk1 = exterior_derivative(&FormSpace::new(&mesh, k + 1, Family::TrimmedP1, false).unwrap()).unwrap();
            assert!(dk1.product_nonzeros(&dk).is_empty());
        }
    }
}

#[test]
fn gradient_kernel_is_constants() {
    let mesh = square(2);
    let d0 = exterior_derivative(&FormSpace::new(&mesh, 0, Family::TrimmedP1, false).unwrap()).unwrap();
    let mut entries = Vec::new();
    for i in 0..d0.nrows {
        for p in d0.indptr[i]..d0.indptr[i + 1] {
            entries.push((i, d0.indices[p], d0.values[p] as i64));
        }
    }
    assert_eq!(integer_rank(d0.nrows, d0.ncols, &entries), mesh.n_vertices() - 1);
}

#[test]
fn constrained_spaces_map_to_constrained_spaces() {
    let mesh = cube(2).mark_gamma(&GammaSelector::Plane { axis: 0, value: 0.0 }).unwrap();
    for k in 0..3 {
        let vk = FormSpace::new(&mesh, k, Family::TrimmedP1, true).unwrap();
        let vk1 = FormSpace::new(&mesh, k + 1, Family::TrimmedP1, true).unwrap();
        let d = exterior_derivative(&vk).unwrap();
        let x: Vec<f64> = (0..vk.n_dofs()).map(|i| if vk.is_constrained(i) { 0.0 } else { 1.0 + i as f64 }).collect();
        let y = d.apply(&x);
        for j in 0..vk1.n_dofs() {
            if vk1.is_constrained(j) {
                assert_eq!(y[j], 0.0);
            }
        }
    }
}

#[test]
fn whitney_derivative_matches_incidence() {
    for mesh in [square(2), cube(2)] {
        let n = mesh.dim();
        for k in 0..n {
            let vk = FormSpace::new(&mesh, k, Family::TrimmedP1, false).unwrap();
            let vk1 = FormSpace::new(&mesh, k + 1, Family::TrimmedP1, false).unwrap();
            let d = exterior_derivative(&vk).unwrap();
            for c in 0..mesh.n_cells() {
                let g = CellGeometry::new(&mesh, c);
                let dofs = vk.local_dofs(c);
                let derivs = vk.local_derivative(&g).unwrap();
                for (l, &dof) in dofs.iter().enumerate() {
                    let mut x = vec![0.0; vk.n_dofs()];
                    x[dof] = 1.0;
                    let field = DiscreteField::new(vk1.clone(), d.apply(&x)).unwrap();
                    let via_d = field.eval_with(&g, &vec![1.0 / (n + 1) as f64; n + 1]);
                    for comp in 0..3 {
                        assert!((via_d[comp] - derivs[l][comp]).abs() < 1e-10, "k={k} cell={c}");
                    }
                }
            }
        }
    }
}

#[test]
fn p1_reproduces_linears() {
    let mesh = cube(2);
    let space = FormSpace::new(&mesh, 0, Family::LagrangeP1, false).unwrap();
    let coeffs = mesh.vertices().iter().map(|x| x[0]).collect();
    let field = DiscreteField::new(space, coeffs).unwrap();
    let bary = [0.1, 0.2, 0.3, 0.4];
    for c in 0..mesh.n_cells() {
        let x = from_barycentric(&mesh.cell_points(c), &bary);
        assert!((field.evaluate_proxy(c, &bary).unwrap()[0] - x[0]).abs() < 1e-14);
    }
    assert!(field.evaluate_proxy(0, &[1.2, -0.2, 0.0, 0.0]).is_err());
}

#[test]
fn constants_reproduced_by_canonical_interpolant() {
    let c = [0.3, -1.2, 2.5];
    for (mesh, ks) in [(square(3), vec![1, 2]), (cube(2), vec![1, 2, 3])] {
        let n = mesh.dim();
        for k in ks {
            let comps = n_components(k, n);
            let mut cv = [0.0; 3];
            cv[..comps].copy_from_slice(&c[..comps]);
            let space = FormSpace::new(&mesh, k, Family::TrimmedP1, false).unwrap();
            let field = canonical_interpolate(&space, |_| cv, 2);
            let bary = vec![1.0 / (n + 1) as f64; n + 1];
            for cell in 0..mesh.n_cells() {
                let v = field.evaluate_proxy(cell, &bary).unwrap();
                for d in 0..3 {
                    assert!((v[d] - cv[d]).abs() < 1e-12, "k={k} n={n}");
                }
            }
        }
    }
}

#[test]
fn unit_face_flux_oracle() {
    let mesh = cube(1);
    let space = FormSpace::new(&mesh, 2, Family::TrimmedP1, false).unwrap();
    let face = 5;
    let mut coeffs = vec![0.0; space.n_dofs()];
    coeffs[face] = 1.0;
    let field = DiscreteField::new(space, coeffs).unwrap();
    let verts = mesh.simplex(2, face).to_vec();
    let pts = mesh.simplex_points(2, face);
    let nvec = cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]));
    let cell = mesh.face_cells(face)[0];
    let cell_verts = mesh.cell(cell).to_vec();
    let rule = simplex_rule(2, 4);
    let mut flux = 0.0;
    for (b, w) in rule.points.iter().zip(&rule.weights) {
        let mut bary = [0.0; 4];
        for (l, v) in cell_verts.iter().enumerate() {
            if let Some(p) = verts.iter().position(|u| u == v) {
                bary[l] = b[p];
            }
        }
        let val = field.evaluate_proxy(cell, &bary).unwrap();
        flux += w * 0.5 * dot(&val, &nvec);
    }
    assert!((flux - 1.0).abs() < 1e-13);
}

fn linear_field(k: usize, n: usize) -> (impl Fn(&Vec3) -> Vec3 + Sync + Clone, [Vec3; 3]) {
    // v_i(x) = b_i + A_i . x
    let a = [[0.3, -0.7, 1.1], [0.5, 0.2, -0.4], [-0.9, 0.6, 0.25]];
    let b = [0.1, -0.2, 0.3];
    let comps = n_components(k, n);
    let f = move |x: &Vec3| {
        let mut v = [0.0; 3];
        for i in 0..comps {
            v[i] = b[i] + (0..n).map(|j| a[i][j] * x[j]).sum::<f64>();
        }
        v
    };
    let mut jac = [[0.0; 3]; 3];
    for i in 0..comps {
        for j in 0..n {
            jac[i][j] = a[i][j];
        }
    }
    (f, jac)
}

#[test]
fn canonical_interpolation_commutes_with_d() {
    for mesh in [square(2), cube(2)] {
        let n = mesh.dim();
        for k in 0..n {
            let (v, jac) = linear_field(k, n);
            let dv = d_proxy(k, n, &jac);
            let vk = FormSpace::new(&mesh, k, Family::TrimmedP1, false).unwrap();
            let vk1 = FormSpace::new(&mesh, k + 1, Family::TrimmedP1, false).unwrap();
            let ik = canonical_interpolate(&vk, v, 3);
            let ik1 = canonical_interpolate(&vk1, |_| dv, 3);
            let d = exterior_derivative(&vk).unwrap();
            let lhs = d.apply(&ik.coeffs);
            for (a, b) in lhs.iter().zip(&ik1.coeffs) {
                assert!((a - b).abs() < 1e-12, "k={k} n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn quasi_interpolant_preserves_constants_and_traces() {
    let mesh = cube(2);
    for k in 0..3 {
        let field = quasi_interpolate_pih(&mesh, k, |_| [1.5, -0.5, 2.0], false).unwrap();
        for c in 0..mesh.n_cells() {
            let v = field.evaluate_proxy(c, &[0.25; 4]).unwrap();
            let comps = n_components(k, 3);
            for d in 0..comps {
                assert!((v[d] - [1.5, -0.5, 2.0][d]).abs() < 1e-12);
            }
        }
    }
    let gm = cube(2).mark_gamma(&GammaSelector::WholeBoundary).unwrap();
    let bubble = |x: &Vec3| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * x[2] * (1.0 - x[2]);
    let fields: [Box<dyn Fn(&Vec3) -> Vec3 + Sync>; 3] = [
        Box::new(move |x: &Vec3| [bubble(x) + 0.0, 0.0, 0.0]),
        // tangential components vanish on every face
        Box::new(|x: &Vec3| {
            [
                (3.0 * x[0]).cos() * x[1] * (1.0 - x[1]) * x[2] * (1.0 - x[2]),
                x[0] * (1.0 - x[0]) * (2.0 * x[1]).sin() * x[2] * (1.0 - x[2]),
                x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * (x[2] + 1.0),
            ]
        }),
        // normal component vanishes on every face
        Box::new(|x: &Vec3| [x[0] * (1.0 - x[0]) * x[1].exp(), x[1] * (1.0 - x[1]) * x[2], x[2] * (1.0 - x[2]) * (x[0] + 2.0)]),
    ];
    for (k, v) in fields.iter().enumerate() {
        let field = quasi_interpolate_pih(&gm, k, v, true).unwrap();
        for i in 0..field.coeffs.len() {
            if field.space.is_constrained(i) {
                assert_eq!(field.coeffs[i], 0.0, "k={k} dof {i}");
            }
        }
    }
}

#[test]
fn clement_matches_quasi_interpolant_at_k0() {
    let mesh = cube(2).mark_gamma(&GammaSelector::Plane { axis: 2, value: 0.0 }).unwrap();
    let v = |x: &Vec3| [(x[0] + 2.0 * x[1]).sin() * x[2].exp(), 0.0, 0.0];
    for gamma in [false, true] {
        let a = clement_interpolate(&mesh, 0, v, gamma).unwrap();
        let b = quasi_interpolate_pih(&mesh, 0, v, gamma).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
    }
    let c = clement_interpolate(&mesh, 1, |_| [1.0, 2.0, 3.0], false).unwrap();
    let val = c.evaluate_proxy(3, &[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert!((val[0] - 1.0).abs() < 1e-14 && (val[1] - 2.0).abs() < 1e-14 && (val[2] - 3.0).abs() < 1e-14);
}

#[test]
fn discrete_field_ascii_dump() {
    let mesh = square(1);
    let space = FormSpace::new(&mesh, 0, Family::LagrangeP1, false).unwrap();
    let f = DiscreteField::new(space, vec![0.5, 1.0, -2.0, 0.1]).unwrap();
    assert_eq!(f.to_ascii(), "0 0.5\n1 1.0\n2 -2.0\n3 0.1\n");
}
