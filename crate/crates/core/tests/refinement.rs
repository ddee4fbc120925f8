use cda_core::mesh::{generate_disk_mesh, quality, refine, BoundaryLabel, MarkSet};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn repeated_refinement_stays_conforming(
        h in 0.8f64..1.5,
        seeds in proptest::collection::vec(proptest::collection::vec(0usize..10_000, 1..12), 1..4),
    ) {
        let mut mesh = generate_disk_mesh(5.0, 2.5, h).unwrap();
        let inclusion = mesh.region_area(cda_core::mesh::Region::Inclusion);
        for picks in seeds {
            let n = mesh.num_triangles();
            let marks: MarkSet = picks.iter().map(|p| p % n).collect();
            let next = refine(&mesh, &marks).unwrap();
            next.check().unwrap();
            prop_assert!(next.num_triangles() > n);
            prop_assert!(next.contains_vertices_of(&mesh));
            // every marked triangle is split
            for t in marks.iter() {
                prop_assert!(next.triangles().iter().all(|c| c.vertices != mesh.triangles()[t].vertices));
            }
            prop_assert!(quality(&next) > 0.0);
            prop_assert_eq!(next.loops(BoundaryLabel::Interface).len(), 1);
            // interface midpoints stay on the chords, so the inclusion keeps its area
            prop_assert!((next.region_area(cda_core::mesh::Region::Inclusion) - inclusion).abs() < 1e-10 * inclusion);
            mesh = next;
        }
    }
}
