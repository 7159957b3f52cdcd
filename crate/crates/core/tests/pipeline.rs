use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use socnav_core::model::{save_dataset, save_survey};
use socnav_core::report::{render_figures, run_pipeline, Config, PipelineOptions, ReportError};
use socnav_core::synth::{fixture_specs, fixture_survey, generate};

fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("data");
    let records: Vec<_> = fixture_specs(42).iter().map(|s| generate(s).unwrap()).collect();
    save_dataset(&records, &data).unwrap();
    let survey = dir.join("survey.csv");
    save_survey(&fixture_survey(&records, &Default::default(), 42).unwrap(), &survey).unwrap();
    (data, survey)
}

fn csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn full_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, survey) = fixture(tmp.path());
    let a = Config::new(data.clone(), Some(survey.clone()), tmp.path().join("a"));
    let b = Config::new(data, Some(survey), tmp.path().join("b"));
    let sa = run_pipeline(&a, &PipelineOptions::default()).unwrap();
    run_pipeline(&b, &PipelineOptions::default()).unwrap();
    let (ca, cb) = (csvs(&tmp.path().join("a")), csvs(&tmp.path().join("b")));
    assert!(ca.len() >= 12, "{:?}", ca.keys());
    assert_eq!(ca, cb);
    assert!(!tmp.path().join("a/.partial").exists());
    assert_eq!(sa.n_experiments, 24);
    assert_eq!(sa.subsets.len(), 2 * 2047);
    for f in &sa.files {
        assert!(tmp.path().join("a").join(f).exists(), "{f}");
    }
}

fn svg_values(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    doc.descendants().filter_map(|n| n.attribute("data-value").map(str::to_string)).collect()
}

#[test]
fn figures_are_valid_svg_backed_by_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, survey) = fixture(tmp.path());
    let out = tmp.path().join("out");
    run_pipeline(&Config::new(data, Some(survey), out.clone()), &PipelineOptions::default()).unwrap();
    for (svg, csv) in [
        ("aggregates.svg", "aggregates.csv"),
        ("heatmap.svg", "heatmap.csv"),
        ("cumulative_ari.svg", "cumulative_ari.csv"),
    ] {
        let table = fs::read_to_string(out.join(csv)).unwrap();
        let cells: Vec<&str> = table.lines().flat_map(|l| l.split(',')).collect();
        let values = svg_values(&out.join(svg));
        assert!(!values.is_empty(), "{svg}");
        for v in values {
            assert!(cells.contains(&v.as_str()), "{svg}: {v} not in {csv}");
        }
    }

    let before = fs::read(out.join("heatmap.svg")).unwrap();
    fs::remove_file(out.join("heatmap.svg")).unwrap();
    render_figures(&out).unwrap();
    assert_eq!(fs::read(out.join("heatmap.svg")).unwrap(), before);
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, survey) = fixture(tmp.path());
    let out = tmp.path().join("out");
    run_pipeline(&Config::new(data, Some(survey), out.clone()), &PipelineOptions::default()).unwrap();
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
    assert_eq!(m["qm_only"], false);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 25);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o["file"] == "subset_results.csv"));
}

#[test]
fn qm_only_skips_survey_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, survey) = fixture(tmp.path());
    let out = tmp.path().join("out");
    let opts = PipelineOptions {
        qm_only: true,
        ..Default::default()
    };
    let summary = run_pipeline(&Config::new(data, Some(survey), out.clone()), &opts).unwrap();
    assert!(summary.selected_k.is_none());
    assert!(out.join("metrics_norm.csv").exists());
    assert!(out.join("aggregates.csv").exists());
    assert!(!out.join("hm_norm.csv").exists());
    assert!(!out.join("correlations.csv").exists());
    let agg = fs::read_to_string(out.join("aggregates.csv")).unwrap();
    let second = agg.lines().nth(1).unwrap();
    // hm_mean and hm_std are empty
    assert!(second.contains(",,,"), "{second}");
}

#[test]
fn failed_run_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, _) = fixture(tmp.path());
    let out = tmp.path().join("out");
    let bad_survey = tmp.path().join("bad.csv");
    fs::write(&bad_survey, "experiment_id,nonsense\nx,1\n").unwrap();
    let err = run_pipeline(&Config::new(data.clone(), Some(bad_survey), out.clone()), &PipelineOptions::default()).unwrap_err();
    assert!(matches!(err, ReportError::Stage { stage: "normalize", .. }), "{err}");
    assert!(!out.exists());

    // A pre-existing output directory survives, without a staging leftover.
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    let missing = Config::new(tmp.path().join("nowhere"), None, out.clone());
    assert!(run_pipeline(&missing, &PipelineOptions::default()).is_err());
    assert!(out.join("keep.txt").exists());
    assert!(!out.join(".partial").exists());
    assert!(!out.join("metrics_raw.csv").exists());
}
