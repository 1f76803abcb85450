use eyeflow::gmsh::{parse_msh, write_msh, MshError};
use eyeflow_core::mesh::{generate_eye_cross_section, rectangle, BoundaryTag, EyeGeometry, Mesh, RegionTag, SideTags};
use proptest::prelude::*;

/// A 2D MSH 4.1 file: `groups` are (dim, tag, name); entity `(dim, tag)`
/// carries physical tag `tag`; `blocks` are (dim, entity, type, elements).
fn msh(groups: &[(usize, i64, &str)], nodes: &[[f64; 2]], blocks: &[(usize, i64, u32, Vec<Vec<u64>>)]) -> String {
    let mut s = String::from("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    s += &format!("$PhysicalNames\n{}\n", groups.len());
    for (d, t, n) in groups {
        s += &format!("{d} {t} \"{n}\"\n");
    }
    s += "$EndPhysicalNames\n$Entities\n";
    let count = |d: usize| groups.iter().filter(|g| g.0 == d).count();
    s += &format!("0 {} {} 0\n", count(1), count(2));
    for d in [1, 2] {
        for (_, t, _) in groups.iter().filter(|g| g.0 == d) {
            s += &format!("{t} 0 0 0 1 1 0 1 {t} 0\n");
        }
    }
    s += "$EndEntities\n";
    let n = nodes.len();
    s += &format!("$Nodes\n1 {n} 1 {n}\n2 1 0 {n}\n");
    for i in 1..=n {
        s += &format!("{i}\n");
    }
    for p in nodes {
        s += &format!("{} {} 0\n", p[0], p[1]);
    }
    s += "$EndNodes\n";
    let total: usize = blocks.iter().map(|b| b.3.len()).sum();
    s += &format!("$Elements\n{} {total} 1 {total}\n", blocks.len());
    let mut id = 1;
    for (d, e, kind, els) in blocks {
        s += &format!("{d} {e} {kind} {}\n", els.len());
        for el in els {
            s += &id.to_string();
            for v in el {
                s += &format!(" {v}");
            }
            s += "\n";
            id += 1;
        }
    }
    s + "$EndElements\n"
}

const SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

fn square_edges() -> Vec<Vec<u64>> {
    vec![vec![1, 2], vec![2, 3], vec![3, 4], vec![4, 1]]
}

#[test]
fn two_triangles_with_tagged_sides() {
    let text = msh(
        &[(1, 1, "Gamma_Sc"), (2, 2, "AqueousHumor")],
        &SQUARE,
        &[(1, 1, 1, square_edges()), (2, 2, 2, vec![vec![1, 2, 3], vec![1, 3, 4]])],
    );
    let m = parse_msh(&text).unwrap();
    assert_eq!((m.dim(), m.n_vertices(), m.n_cells(), m.n_facets()), (2, 4, 2, 4));
    assert!(m.cell_regions().iter().all(|&r| r == RegionTag::AqueousHumor));
    assert!(m.facet_tags().iter().all(|&t| t == BoundaryTag::GammaSc));
    assert!((m.total_volume() - 1.0).abs() < 1e-15);
    assert!((m.tag_measure(BoundaryTag::GammaSc) - 4.0).abs() < 1e-15);
}

#[test]
fn clockwise_cells_are_reoriented() {
    let text = msh(
        &[(1, 1, "gamma_sc"), (2, 2, "aqueoushumor")],
        &SQUARE,
        &[(1, 1, 1, square_edges()), (2, 2, 2, vec![vec![1, 3, 2], vec![1, 4, 3]])],
    );
    let m = parse_msh(&text).unwrap();
    for c in 0..m.n_cells() {
        assert!((m.signed_volume(c) - 0.5).abs() < 1e-15);
    }
}

#[test]
fn three_region_fan() {
    // Center node 4 inside the triangle 1-2-3, one cell per region.
    let nodes = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.3, 0.3]];
    let text = msh(
        &[(1, 1, "gamma_amb"), (1, 2, "gamma_body"), (1, 3, "gamma_c"), (2, 4, "aqueoushumor"), (2, 5, "cornea"), (2, 6, "lens")],
        &nodes,
        &[
            (1, 1, 1, vec![vec![1, 2]]),
            (1, 2, 1, vec![vec![2, 3], vec![3, 1]]),
            (1, 3, 1, vec![vec![1, 4]]),
            (2, 4, 2, vec![vec![1, 2, 4]]),
            (2, 5, 2, vec![vec![2, 3, 4]]),
            (2, 6, 2, vec![vec![3, 1, 4]]),
        ],
    );
    let m = parse_msh(&text).unwrap();
    assert_eq!(m.n_cells(), 3);
    assert_eq!(m.cell_regions(), &[RegionTag::AqueousHumor, RegionTag::Cornea, RegionTag::Lens]);
    assert_eq!(m.n_facets(), 4);
    assert!((m.total_volume() - 0.5).abs() < 1e-15);
}

#[test]
fn quadrilaterals_are_rejected() {
    let text = msh(&[(2, 1, "aqueoushumor")], &SQUARE, &[(2, 1, 3, vec![vec![1, 2, 3, 4]])]);
    assert!(matches!(parse_msh(&text), Err(MshError::NonSimplex { kind: 3, .. })));
}

#[test]
fn unknown_group_name_is_reported() {
    let text = msh(
        &[(1, 1, "gamma_sc"), (2, 2, "retina")],
        &SQUARE,
        &[(1, 1, 1, square_edges()), (2, 2, 2, vec![vec![1, 2, 3], vec![1, 3, 4]])],
    );
    assert_eq!(parse_msh(&text), Err(MshError::UnmappedName("retina".into())));
}

#[test]
fn structural_errors() {
    let good = msh(
        &[(1, 1, "gamma_sc"), (2, 2, "aqueoushumor")],
        &SQUARE,
        &[(1, 1, 1, square_edges()), (2, 2, 2, vec![vec![1, 2, 3], vec![1, 3, 4]])],
    );
    assert!(matches!(parse_msh(&good.replace("4.1 0 8", "2.2 0 8")), Err(MshError::Version(_))));
    assert!(matches!(parse_msh(&good.replace("1 3 4\n", "1 3 9\n")), Err(MshError::UnknownNode(9))));
    // Untagged outer edge.
    let open = msh(
        &[(1, 1, "gamma_sc"), (2, 2, "aqueoushumor")],
        &SQUARE,
        &[(1, 1, 1, square_edges()[..3].to_vec()), (2, 2, 2, vec![vec![1, 2, 3], vec![1, 3, 4]])],
    );
    assert!(matches!(parse_msh(&open), Err(MshError::Invalid(m)) if m.contains("no tag")));
    // No fluid cells.
    let dry = msh(
        &[(1, 1, "gamma_amb"), (2, 2, "lens")],
        &SQUARE,
        &[(1, 1, 1, square_edges()), (2, 2, 2, vec![vec![1, 2, 3], vec![1, 3, 4]])],
    );
    assert!(matches!(parse_msh(&dry), Err(MshError::Invalid(m)) if m.contains("flow region")));
    let cut = &good[..good.find("$Elements").unwrap()];
    assert_eq!(parse_msh(cut), Err(MshError::MissingSection("Elements")));
    let with_extra = good.replacen("$Entities", "$Comments\nfree text\n$EndComments\n$Entities", 1);
    assert!(parse_msh(&with_extra).is_ok());
}

fn cell_set(m: &Mesh) -> Vec<(Vec<usize>, RegionTag)> {
    let mut v: Vec<_> = (0..m.n_cells())
        .map(|c| {
            let mut k = m.cell(c).to_vec();
            k.sort();
            (k, m.region(c))
        })
        .collect();
    v.sort();
    v
}

fn facet_set(m: &Mesh) -> Vec<(Vec<usize>, BoundaryTag)> {
    let mut v: Vec<_> = (0..m.n_facets())
        .map(|f| {
            let mut k = m.facet(f).to_vec();
            k.sort();
            (k, m.facet_tag(f))
        })
        .collect();
    v.sort();
    v
}

fn assert_same_mesh(a: &Mesh, b: &Mesh) {
    assert_eq!(a.vertices(), b.vertices());
    assert_eq!(cell_set(a), cell_set(b));
    assert_eq!(facet_set(a), facet_set(b));
}

#[test]
fn eye_mesh_round_trip() {
    let g = EyeGeometry { h: 0.6e-3, ..Default::default() };
    let m = generate_eye_cross_section(&g).unwrap();
    let text = write_msh(&m).unwrap();
    let back = parse_msh(&text).unwrap();
    assert_same_mesh(&m, &back);
    assert_eq!(write_msh(&back).unwrap(), text);
    for r in RegionTag::STANDARD {
        assert_eq!(m.region_volume(r), back.region_volume(r));
    }
}

#[test]
fn custom_regions_cannot_be_written() {
    let m = rectangle(2, 2, [0.0, 1.0], [0.0, 1.0], RegionTag::Custom(7), SideTags::uniform(BoundaryTag::GammaSc));
    assert_eq!(write_msh(&m), Err(MshError::UnnamedRegion(RegionTag::Custom(7))));
}

fn tag() -> impl Strategy<Value = BoundaryTag> {
    prop::sample::select(BoundaryTag::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rectangles_round_trip(
        nx in 1usize..7, ny in 1usize..7, x0 in -1.0f64..1.0, y0 in -1.0f64..1.0,
        w in 1e-3f64..5.0, hgt in 1e-3f64..5.0, t in proptest::array::uniform4(tag()),
    ) {
        let sides = SideTags { left: t[0], right: t[1], bottom: t[2], top: t[3] };
        let m = rectangle(nx, ny, [x0, x0 + w], [y0, y0 + hgt], RegionTag::AqueousHumor, sides);
        let back = parse_msh(&write_msh(&m).unwrap()).unwrap();
        prop_assert_eq!(m.vertices(), back.vertices());
        prop_assert_eq!(cell_set(&m), cell_set(&back));
        prop_assert_eq!(facet_set(&m), facet_set(&back));
        for b in BoundaryTag::ALL {
            prop_assert!((m.tag_measure(b) - back.tag_measure(b)).abs() <= 1e-12 * (1.0 + m.tag_measure(b)));
        }
    }

    #[test]
    fn truncated_files_are_rejected(frac in 0.0f64..1.0) {
        let m = rectangle(2, 2, [0.0, 1.0], [0.0, 1.0], RegionTag::AqueousHumor, SideTags::uniform(BoundaryTag::GammaSc));
        let text = write_msh(&m).unwrap();
        let body = text.trim_end().len();
        let cut = (frac * body as f64) as usize;
        prop_assert!(parse_msh(&text[..cut]).is_err());
    }
}
