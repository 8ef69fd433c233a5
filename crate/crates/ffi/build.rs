use std::env;
use std::path::PathBuf;

use cbindgen::{Config, EnumConfig, Language, RenameRule};

fn main() {
    let dir = env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    println!("cargo:rerun-if-changed=src/lib.rs");
    let config = Config {
        language: Language::C,
        include_guard: Some("KERNSMOOTH_H".into()),
        cpp_compat: true,
        documentation: true,
        enumeration: EnumConfig {
            rename_variants: RenameRule::ScreamingSnakeCase,
            prefix_with_name: true,
            ..EnumConfig::default()
        },
        ..Config::default()
    };
    let out = PathBuf::from(&dir).join("include").join("kernsmooth.h");
    cbindgen::Builder::new()
        .with_config(config)
        .with_crate(&dir)
        .generate()
        .expect("generate C header")
        .write_to_file(out);
}
