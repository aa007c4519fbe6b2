//! Discrete trace constants against values from an independent dense
//! generalized eigen solve (numpy/scipy, opposite diagonal pattern).

use antiplane_core::mesh::{generate_rect_mesh, ElecTag, MechTag, SideTag, TaggingRule};
use antiplane_core::spaces::{build_space, estimate_trace_constant, SpaceKind, TraceOptions, TraceQuadrature};

fn clamped_left() -> TaggingRule {
    TaggingRule {
        bottom: SideTag::new(MechTag::G3, None),
        right: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
        top: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
        left: SideTag::new(MechTag::G1, Some(ElecTag::Ga)),
    }
}

fn trace(n: usize, tags: &TaggingRule, quadrature: TraceQuadrature) -> f64 {
    let mesh = generate_rect_mesh(1.0, 1.0, n, n, tags).unwrap();
    let v = build_space(&mesh, SpaceKind::V).unwrap();
    let opts = TraceOptions {
        quadrature,
        ..Default::default()
    };
    estimate_trace_constant(&mesh, &v, &opts).unwrap().value
}

const CASES: [(usize, bool, f64, f64); 4] = [
    // (n, clamped on top, exact quadrature, lumped)
    (4, true, 1.0, 1.0),
    (8, true, 1.0, 1.0),
    (4, false, 0.818916800116, 0.829508175171),
    (8, false, 0.829515824040, 0.832185139101),
];

#[test]
fn trace_constants_match_reference() {
    for (n, top, exact, lumped) in CASES {
        let tags = if top { TaggingRule::standard() } else { clamped_left() };
        let got_exact = trace(n, &tags, TraceQuadrature::Exact);
        let got_lumped = trace(n, &tags, TraceQuadrature::Lumped);
        assert!((got_exact - exact).abs() <= 0.1 * exact, "n={n} top={top}: {got_exact} vs {exact}");
        assert!((got_lumped - lumped).abs() <= 0.1 * lumped, "n={n} top={top}: {got_lumped} vs {lumped}");
        // lumping never shrinks the boundary mass
        assert!(got_lumped >= got_exact - 1e-9);
    }
}

#[test]
fn bottom_contact_top_clamp_is_one() {
    // v = 1 - y attains the bound exactly
    for n in [4, 8] {
        let c = trace(n, &TaggingRule::standard(), TraceQuadrature::Exact);
        assert!((c - 1.0).abs() < 1e-8, "{c}");
    }
}
