//! The shipped model files must parse to exactly the reference models the
//! library defines in code.

use std::path::PathBuf;

use netskel::model::Ldim;
use netskel::{fixtures, io};

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn read(name: &str) -> Ldim {
    io::read_model(&models_dir().join(name)).expect(name)
}

#[test]
fn shipped_model_files_match_the_reference_models() {
    let table: Vec<(&str, Ldim)> = vec![
        ("diamond.toml", fixtures::diamond_unit()),
        ("diamond_masked.toml", fixtures::diamond_masked()),
        ("branch.toml", fixtures::branched_five(3.0)),
        ("cycle.toml", fixtures::delayed_cycle_five(0.3)),
        ("cycle_hot.toml", fixtures::delayed_cycle_five(3.0)),
        ("masked_triangle.toml", fixtures::triangle_chain(1.0, 1.0, -1.0)),
        ("collider.toml", fixtures::equivalent_collider(1.0, 1.0)),
        ("square.toml", fixtures::coparent_square(1.0, 1.0)),
        ("triangle.toml", fixtures::triangle_chain(1.0, 2.0, 1.0)),
    ];
    for (file, reference) in table {
        assert_eq!(read(file), reference, "{file} drifted from its reference");
    }
}
