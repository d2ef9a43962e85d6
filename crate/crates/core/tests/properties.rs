use std::f64::consts::PI;
use std::sync::OnceLock;

use katobound::constants::{eval_gallot_rhs, eval_gamma, eval_i, eval_j, i_bounds, SpectralParams, DEFAULT_I_RELTOL};
use katobound::eigen::{eigendecompose, EigenOptions, SpectralDecomposition};
use katobound::geometry::{GridSpec, MetricFamily, Profile, Stencil};
use katobound::hodge::assemble_hodge1;
use katobound::kato::{b_kato_numeric, c_kato_numeric, check_kato_relation, DEFAULT_QUAD_ORDER};
use katobound::model::Manifold;
use katobound::spectral::{heat_apply, resolvent_apply};
use proptest::prelude::*;

const N: usize = 8;
const NODES: usize = N * N * N;

fn conformal(eps: f64) -> Manifold {
    let grid = GridSpec::cubic(3, N, 2.0 * PI).unwrap();
    let family = MetricFamily::Conformal {
        profile: Profile::bump(eps, 0.9, vec![PI; 3]),
    };
    Manifold::build(family, grid, Stencil::Face).unwrap()
}

fn well() -> &'static (Manifold, SpectralDecomposition) {
    static CELL: OnceLock<(Manifold, SpectralDecomposition)> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = conformal(-0.2);
        let dec = eigendecompose(&m.laplacian, EigenOptions::full()).unwrap();
        (m, dec)
    })
}

fn sup(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn field(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, NODES)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn i_lies_between_its_bounds(alpha in 0.01f64..50.0, delta in 3.05f64..8.0, extra in 0.05f64..6.0) {
        let p = delta / 2.0 + extra;
        let i = eval_i(alpha, delta, p, DEFAULT_I_RELTOL).unwrap();
        let (lo, hi) = i_bounds(alpha, delta, p).unwrap();
        prop_assert!(lo <= i * (1.0 + 1e-10) && i <= hi * (1.0 + 1e-10), "{lo} {i} {hi}");
    }

    #[test]
    fn j_is_increasing_in_beta(beta in 0.01f64..5.0, db in 0.01f64..2.0, delta in 3.05f64..6.0, extra in 0.1f64..4.0) {
        let p = delta / 2.0 + extra;
        prop_assert!(eval_j(beta, delta, p).unwrap() < eval_j(beta + db, delta, p).unwrap());
    }

    #[test]
    fn gamma_is_nonincreasing_in_lambda(l in 1e-3f64..1e3, ratio in 1.0f64..10.0, delta in 3.05f64..7.0, diameter in 0.1f64..10.0) {
        let at = |lambda: f64| SpectralParams { lambda, ..SpectralParams::new(3, delta, diameter) };
        let g1 = eval_gamma(&at(l)).unwrap();
        let g2 = eval_gamma(&at(l * ratio)).unwrap();
        prop_assert!(g2 <= g1 * (1.0 + 1e-12), "{g1} {g2}");
    }

    #[test]
    fn evaluators_are_pure(lambda in 1e-2f64..1e2, delta in 3.05f64..7.0, diameter in 0.1f64..10.0) {
        let prm = SpectralParams { lambda, ..SpectralParams::new(3, delta, diameter) };
        prop_assert_eq!(eval_gamma(&prm).unwrap().to_bits(), eval_gamma(&prm).unwrap().to_bits());
        prop_assert_eq!(eval_gallot_rhs(&prm).unwrap().to_bits(), eval_gallot_rhs(&prm).unwrap().to_bits());
    }

    #[test]
    fn heat_is_a_semigroup(f in field(-1.0, 1.0), t in 0.01f64..1.0, s in 0.01f64..1.0) {
        let (_, dec) = well();
        let once = heat_apply(dec, t + s, &f).unwrap();
        let twice = heat_apply(dec, t, &heat_apply(dec, s, &f).unwrap()).unwrap();
        let err = once.iter().zip(&twice).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-9, "{err:e}");
    }

    #[test]
    fn heat_contracts_and_preserves_sign(f in field(0.0, 1.0), t in 0.01f64..2.0) {
        let (_, dec) = well();
        let u = heat_apply(dec, t, &f).unwrap();
        prop_assert!(sup(&u) <= sup(&f) * (1.0 + 1e-12));
        prop_assert!(u.iter().all(|&x| x >= -1e-9 * sup(&f)));
    }

    #[test]
    fn resolvent_identity(f in field(-1.0, 1.0), a in 0.1f64..5.0, b in 0.1f64..5.0) {
        let (_, dec) = well();
        let ra = resolvent_apply(dec, a, &f).unwrap();
        let rb = resolvent_apply(dec, b, &f).unwrap();
        let rarb = resolvent_apply(dec, a, &rb).unwrap();
        let err = (0..NODES).fold(0.0f64, |m, i| m.max(((a - b) * rarb[i] - (rb[i] - ra[i])).abs()));
        prop_assert!(err < 1e-8, "{err:e}");
    }

    #[test]
    fn kato_constants_are_monotone_and_related(v in field(0.0, 2.0), alpha in 0.2f64..4.0, beta in 0.1f64..2.0, k in 1.1f64..3.0) {
        let (_, dec) = well();
        let c1 = c_kato_numeric(dec, &v, alpha).unwrap();
        let c2 = c_kato_numeric(dec, &v, alpha * k).unwrap();
        prop_assert!(c2 <= c1 * (1.0 + 1e-12));
        let b1 = b_kato_numeric(dec, &v, beta, DEFAULT_QUAD_ORDER).unwrap();
        let b2 = b_kato_numeric(dec, &v, beta * k, DEFAULT_QUAD_ORDER).unwrap();
        prop_assert!(b1 <= b2 * (1.0 + 1e-12));
        for r in check_kato_relation(c1, b1, alpha, beta) {
            prop_assert!(r.verdict.is_verified(), "{} {} {}", r.name.as_str(), r.numeric_lhs, r.paper_rhs);
        }
    }
}

#[test]
fn flat_curvature_vanishes() {
    let m = conformal(0.0);
    assert!(sup(&m.rho) < 1e-12);
}

#[test]
fn hodge_operators_are_self_adjoint() {
    for eps in [0.0, -0.2, 0.3] {
        let m = conformal(eps);
        let h = assemble_hodge1(&m.metric, &m.grid).unwrap();
        assert!(h.hodge.asymmetry() < 1e-8, "eps {eps}: {}", h.hodge.asymmetry());
        assert!(h.bochner.asymmetry() < 1e-8);
    }
}
