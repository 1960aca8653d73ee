use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const AIRPLANE: &str = "-1.7548776662466927,0";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_yoccoz"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    let out_s = out.to_str().unwrap();
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out-dir", out_s]);
    bin().args(&all).output().expect("binary runs")
}

fn run_ok(args: &[&str], out: &Path) {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

struct SchemaDir;

impl jsonschema::Retrieve for SchemaDir {
    fn retrieve(
        &self,
        uri: &jsonschema::Uri<String>,
    ) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri.path().as_str().rsplit('/').next().unwrap_or_default().to_string();
        Ok(read_json(&schema_dir().join(name)))
    }
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn validate(schema: &str, doc: &Path) {
    let schema = read_json(&schema_dir().join(schema));
    let v = jsonschema::options()
        .with_retriever(SchemaDir)
        .build(&schema)
        .expect("schema compiles");
    let instance = read_json(doc);
    let errors: Vec<String> = v.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:#?}", doc.display());
}

/// Digests of the JSON/CSV outputs, keyed by path.
fn digests(out: &Path) -> BTreeMap<String, String> {
    let m = read_json(&out.join("manifest.json"));
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| {
            let p = f["path"].as_str().unwrap();
            p.ends_with(".json") || p.ends_with(".csv")
        })
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn puzzle_at_i_has_three_level0_pieces() {
    let out = scratch("puzzle_i");
    run_ok(&["puzzle", "--c", "0,1", "--depth", "6", "--res", "512"], &out);
    let doc = read_json(&out.join("puzzle.json"));
    assert_eq!(doc["levels"][0]["pieces"].as_array().unwrap().len(), 3);
    assert_eq!(doc["ray_cycle"], serde_json::json!(["1/7", "2/7", "4/7"]));
    validate("puzzle.schema.json", &out.join("puzzle.json"));
    validate("manifest.schema.json", &out.join("manifest.json"));

    let svg = fs::read_to_string(out.join("puzzle.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("class=\"level0\"") && svg.contains("class=\"level4\""));

    let mask = fs::read(out.join("masks/critical6.bin")).unwrap();
    let m = yoccoz::mask::RegionMask::from_bytes(&mask).unwrap();
    assert!(m.count() > 0);
    assert!(m.contains(yoccoz::Complex64::new(0.0, 0.0)));
}

#[test]
fn tableau_at_minus_two_is_non_recurrent() {
    let out = scratch("tableau_m2");
    run_ok(&["tableau", "--c", "-2,0", "--depth", "10"], &out);
    let doc = read_json(&out.join("tableau.json"));
    assert_eq!(doc["verdict"]["kind"], "NonRecurrentAtDepth");
    assert_eq!(doc["rule_violations"].as_array().unwrap().len(), 0);
    validate("tableau.schema.json", &out.join("tableau.json"));
}

#[test]
fn alpha_not_repelling_exits_2() {
    let out = scratch("alpha");
    let o = run(&["puzzle", "--c", "0,0"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("AlphaNotRepelling"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn usage_errors_exit_2() {
    let out = scratch("usage");
    for args in [
        vec!["render", "--c", "0,0", "--res", "0"],
        vec!["render", "--c", "0"],
        vec!["tableau", "--c", "nan,0"],
        vec!["area"],
        vec!["flatten", "--c", "0,0"],
    ] {
        let o = run(&args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn preconditions_exit_2_with_error_name() {
    let out = scratch("pre");
    let cases: [(&[&str], &str); 3] = [
        (&["puzzle", "--c", "0,1", "--h0", "0", "--res", "256"], "InvalidArgument"),
        (&["tableau", "--c", "0,1", "--depth", "6", "--res", "512", "--width", "2"], "InsufficientDepth"),
        (&["renorm", "--c", "-2,0", "--depth", "6", "--res", "512"], "NoReturns"),
    ];
    for (args, name) in cases {
        let o = run(args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(name), "{args:?}");
    }
}

#[test]
fn render_unit_disk_is_symmetric() {
    let out = scratch("render0");
    run_ok(&["render", "--c", "0,0", "--res", "400"], &out);
    let doc = read_json(&out.join("render.json"));
    assert_eq!(doc["negation_symmetric"], true);
    let area = doc["bounded_area"].as_f64().unwrap();
    assert!((area - std::f64::consts::PI).abs() < 0.05, "{area}");
    validate("render.schema.json", &out.join("render.json"));

    let img = image::open(out.join("render.png")).unwrap().to_luma8();
    assert_eq!(img.dimensions(), (400, 400));
    for (x, y, p) in img.enumerate_pixels() {
        let q = img.get_pixel(399 - x, 399 - y);
        assert_eq!(p[0] == 0, q[0] == 0);
    }
}

#[test]
fn render_dendrite_matches_fixture() {
    let out = scratch("render_i");
    run_ok(&["render", "--c", "0,1", "--res", "256", "--iterations", "256"], &out);
    let doc = read_json(&out.join("render.json"));
    let fixture = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/render_i_256.json"));
    assert_eq!(doc, fixture);
    let m = read_json(&out.join("manifest.json"));
    let png = m["outputs"].as_array().unwrap().iter().find(|f| f["path"] == "render.png").unwrap();
    let want = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/render_i_256.png.sha256")).unwrap();
    assert_eq!(png["sha256"].as_str().unwrap(), want.trim());

    // no interior, but slow escapes trace the dendrite through the centre
    let img = image::open(out.join("render.png")).unwrap().to_luma8();
    assert_eq!(img.pixels().filter(|p| p[0] == 0).count(), 0);
    let slow = img.pixels().filter(|p| p[0] == 64).count();
    assert!(slow > 50, "{slow}");
}

#[test]
fn golden_tableaux() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (name, c) in [("minus_two", "-2,0"), ("i", "0,1"), ("basilica", "-1,0"), ("airplane", AIRPLANE)] {
        let out = scratch(&format!("golden_{name}"));
        run_ok(&["tableau", "--c", c, "--depth", "8", "--res", "1024"], &out);
        let got = read_json(&out.join("tableau.json"));
        let want = read_json(&dir.join(format!("tableau_{name}.json")));
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn all_outputs_match_schemas() {
    let out = scratch("schemas");
    run_ok(&["moduli", "--c", "0,1", "--depth", "4", "--res", "256", "--nest-levels", "2"], &out.join("moduli"));
    run_ok(&["area", "--c", "0,1", "--depth", "6", "--res", "512"], &out.join("area"));
    run_ok(&["renorm", "--c", AIRPLANE, "--depth", "8", "--res", "1024"], &out.join("renorm"));
    for (sub, file, schema) in [
        ("moduli", "moduli.json", "moduli.schema.json"),
        ("area", "area.json", "area.schema.json"),
        ("renorm", "plm.json", "plm.schema.json"),
    ] {
        validate(schema, &out.join(sub).join(file));
        validate("manifest.schema.json", &out.join(sub).join("manifest.json"));
    }
    let csv = fs::read_to_string(out.join("area/area.csv")).unwrap();
    assert!(csv.starts_with("level,area,ratio,M_n,exp_neg_b_M_n\n"));
    assert_eq!(csv.lines().count(), 8);

    let plm = read_json(&out.join("renorm/plm.json"));
    assert_eq!(plm["level"], 3);
    assert_eq!(plm["pieces"][0]["l"], 3);
    assert_eq!(plm["orbit_check"], true);
}

#[test]
fn digests_do_not_depend_on_threads() {
    let cases: [(&str, &[&str]); 6] = [
        ("render", &["render", "--c", "0,1", "--res", "256"]),
        ("puzzle", &["puzzle", "--c", "0,1", "--depth", "5", "--res", "512"]),
        ("tableau", &["tableau", "--c", AIRPLANE, "--depth", "8", "--res", "1024"]),
        ("moduli", &["moduli", "--c", "0,1", "--depth", "3", "--res", "256", "--nest-levels", "2"]),
        ("area", &["area", "--c", "-2,0", "--depth", "6", "--res", "512"]),
        ("renorm", &["renorm", "--c", AIRPLANE, "--depth", "8", "--res", "1024"]),
    ];
    for (name, args) in cases {
        let mut seen = Vec::new();
        for threads in ["1", "4", "4"] {
            let out = scratch(&format!("det_{name}_{threads}_{}", seen.len()));
            let mut a = args.to_vec();
            a.extend(["--threads", threads]);
            run_ok(&a, &out);
            let d = digests(&out);
            assert!(!d.is_empty(), "{name}");
            seen.push(d);
        }
        assert_eq!(seen[0], seen[1], "{name}");
        assert_eq!(seen[1], seen[2], "{name}");
    }
}
