use std::fs;
use std::path::Path;
use std::process::Command;

use spmp3d_cli::*;
use spmp3d_core::imaging::{load_image, save_image, Encoding, Engine, QualityTarget};
use spmp3d_core::{fixtures::piecewise_smooth, Domain};

fn args(input: &str, out: &Path) -> ApproximateArgs {
    ApproximateArgs {
        input: Some(input.to_string()),
        out: Some(out.to_path_buf()),
        psnr: Some(40.0),
        ..Default::default()
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spmp3d"))
}

#[test]
fn approximate_reconstruct_evaluate_agree() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.ppm");
    save_image(
        &input,
        &piecewise_smooth(24, 40, 3, 2),
        &Encoding::netpbm(3, 255).unwrap(),
    )
    .unwrap();

    let out = cmd_approximate(
        &RunConfig::resolve(&args(input.to_str().unwrap(), &dir.path().join("run"))).unwrap(),
    )
    .unwrap();
    let report = &out.report.report;
    assert_eq!(report.layout.grid, [3, 5, 1]);

    let rebuilt = dir.path().join("re.ppm");
    cmd_reconstruct(&ReconstructArgs {
        decomp: out.decomposition_path.clone(),
        out: rebuilt.clone(),
        dict: None,
        dict_x: None,
        dict_y: None,
        dict_z: None,
    })
    .unwrap();
    assert_eq!(
        fs::read(&rebuilt).unwrap(),
        fs::read(&out.image_path).unwrap()
    );

    let ev = cmd_evaluate(&EvaluateArgs {
        reference: input.clone(),
        approx: out.image_path.clone(),
        imax: None,
        decomp: Some(out.decomposition_path.clone()),
        kq_out: Some(dir.path().join("kq.csv")),
        out: None,
    })
    .unwrap();
    assert_eq!(ev.psnr, report.psnr);
    assert_eq!(ev.mse, report.mse);
    assert_eq!(ev.snr, report.snr);
    assert_eq!(ev.sr.unwrap().0, report.sr);
    assert_eq!(ev.total_atoms, Some(report.total_atoms));
    let csv = fs::read_to_string(dir.path().join("kq.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().all(|l| l.split(',').count() == 5));

    // the report on disk parses back into the same value
    let on_disk: RunReport =
        serde_json::from_str(&fs::read_to_string(&out.report_path).unwrap()).unwrap();
    assert_eq!(&on_disk, &out.report);
}

#[test]
fn identical_images_evaluate_to_inf() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.pgm");
    save_image(
        &p,
        &piecewise_smooth(8, 8, 1, 1),
        &Encoding::netpbm(1, 255).unwrap(),
    )
    .unwrap();
    let ev = cmd_evaluate(&EvaluateArgs {
        reference: p.clone(),
        approx: p.clone(),
        imax: None,
        decomp: None,
        kq_out: None,
        out: Some(dir.path().join("m.json")),
    })
    .unwrap();
    assert!(ev.psnr.is_infinite());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(json["psnr"], "inf");
    assert_eq!(json["snr"], "inf");
}

#[test]
fn tampered_decomposition_is_a_checksum_error() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        cmd_approximate(&RunConfig::resolve(&args("synthetic", &dir.path().join("s"))).unwrap())
            .unwrap();
    let mut bytes = fs::read(&out.decomposition_path).unwrap();
    let at = bytes.len() / 2;
    bytes[at] ^= 0x40;
    fs::write(&out.decomposition_path, bytes).unwrap();
    let status = bin()
        .args(["reconstruct", "--decomp"])
        .arg(&out.decomposition_path)
        .arg("--out")
        .arg(dir.path().join("x.ppm"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("checksum"));
}

#[test]
fn wrong_dictionary_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        cmd_approximate(&RunConfig::resolve(&args("synthetic", &dir.path().join("s"))).unwrap())
            .unwrap();
    let err = cmd_reconstruct(&ReconstructArgs {
        decomp: out.decomposition_path,
        out: dir.path().join("x.ppm"),
        dict: Some(dict::DictChoice::Dirac),
        dict_x: None,
        dict_y: None,
        dict_z: None,
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("x=thin3d,y=thin3d,z=thin3d"));
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "in = synthetic\nseed = 23\nengine = omp2d\ndomain = pd\nsnr = 30\nmax_j = 50\n",
    )
    .unwrap();
    let a = ApproximateArgs {
        config: Some(cfg.clone()),
        out: Some(dir.path().join("c")),
        ..Default::default()
    };
    let rc = RunConfig::resolve(&a).unwrap();
    assert_eq!(rc.input, Input::Synthetic { seed: 23 });
    assert_eq!(rc.engine, Engine::Omp2d);
    assert_eq!(rc.domain, Domain::Pd);
    assert_eq!(rc.target, QualityTarget::SnrDb(30.0));
    assert_eq!(rc.max_j, 50);
    let out = cmd_approximate(&rc).unwrap();
    assert_eq!(out.report.report.partition.block(), [8, 8, 1]);
    assert_eq!(out.report.dictionary, "x=mixed-pd,y=mixed-pd,z=dirac");
    assert!(out.report.report.snr_db().unwrap() >= 30.0 - 0.5);

    // a flag target replaces the file's
    let b = ApproximateArgs {
        psnr: Some(35.0),
        ..a.clone()
    };
    assert_eq!(
        RunConfig::resolve(&b).unwrap().target,
        QualityTarget::PsnrDb(35.0)
    );
    let both = ApproximateArgs {
        psnr: Some(35.0),
        rho: Some(1.0),
        ..a
    };
    assert_eq!(RunConfig::resolve(&both).unwrap_err().exit_code(), 1);
}

#[test]
fn defaults() {
    let rc = RunConfig::resolve(&args("synthetic", Path::new("x"))).unwrap();
    assert_eq!(rc.engine, Engine::Spmp3d);
    assert_eq!(rc.domain, Domain::Wd);
    assert_eq!(rc.block_for(3), [8, 8, 3]);
    assert_eq!(rc.block_for(32), [8, 8, 8]);
    assert_eq!(rc.dict_for([8, 8, 3]).label(), "x=thin3d,y=thin3d,z=thin3d");
}

#[test]
fn missing_input_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["approximate", "--in", "absent.ppm", "--psnr", "40"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_1() {
    let out = bin()
        .args(["approximate", "--in", "synthetic"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn strict_mode_exits_3_when_a_block_is_capped() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        bin()
            .current_dir(dir.path())
            .args([
                "approximate",
                "--in",
                "synthetic",
                "--psnr",
                "50",
                "--max-atoms",
                "2",
            ])
            .args(extra)
            .output()
            .unwrap()
    };
    assert_eq!(run(&[]).status.code(), Some(3));
    let lenient = run(&["--warn-unreached"]);
    assert_eq!(lenient.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&lenient.stderr).contains("warning"));
}

#[test]
fn memory_command() {
    let out = bin()
        .args([
            "memory",
            "--block",
            "8",
            "--redundancy",
            "5",
            "--atoms",
            "512",
        ])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("38912"));
    assert!(text.contains("PASS"));
    let r = cmd_memory(&MemoryArgs {
        block: 16,
        redundancy: 5,
        atoms: 4096,
        index_bytes: 4,
        real_bytes: 8,
        budget: 48 * 1024,
        json: false,
    });
    assert!(!r.pass);
    let r = cmd_memory(&MemoryArgs {
        block: 8,
        redundancy: 5,
        atoms: 0,
        index_bytes: 4,
        real_bytes: 8,
        budget: 48 * 1024,
        json: true,
    });
    assert!(r.pass);
    assert_eq!(r.footprint.indices, 0);
}

#[test]
fn empty_suite_gives_a_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("empty.suite");
    fs::write(&suite, "# nothing to run\n").unwrap();
    let csv = dir.path().join("out.csv");
    let out = bin()
        .arg("bench")
        .arg("--suite")
        .arg(&suite)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(&csv).unwrap().trim_end(),
        CSV_HEADER.join(",")
    );
}

#[test]
fn bench_lists_missing_files_and_runs_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("small.ppm");
    save_image(
        &img,
        &piecewise_smooth(16, 16, 3, 9),
        &Encoding::netpbm(3, 255).unwrap(),
    )
    .unwrap();
    let suite = dir.path().join("s.suite");
    fs::write(
        &suite,
        "images = small.ppm, gone.ppm\nengines = spmp3d, omp2d\ndomains = pd\nblocks = 8x8x3\npsnr = 40\n",
    )
    .unwrap();
    let out = cmd_bench(&BenchArgs {
        suite,
        csv: dir.path().join("b.csv"),
        json: Some(dir.path().join("b.json")),
    })
    .unwrap();
    assert_eq!(out.missing.len(), 1);
    assert!(out.missing[0].ends_with("gone.ppm"));
    assert_eq!(out.rows.len(), 2);
    assert_eq!(out.comparisons.len(), 1);
    assert!(out.rows.iter().all(|r| (r.psnr - 40.0).abs() <= 0.5));
    let csv = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let json: BenchOutput =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert_eq!(json, out);
}

#[test]
fn synthetic_suite_favours_3d() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s.suite");
    fs::write(&suite, "synthetic = 11, 23, 37\ndomains = wd\npsnr = 45\n").unwrap();
    let started = std::time::Instant::now();
    let out = cmd_bench(&BenchArgs {
        suite,
        csv: dir.path().join("b.csv"),
        json: None,
    })
    .unwrap();
    assert!(started.elapsed().as_secs() < 60);
    assert_eq!(out.comparisons.len(), 3);
    for c in &out.comparisons {
        assert!(c.sr_3d_greater, "{c:?}");
    }
    let s3 = out
        .summary
        .iter()
        .find(|s| s.engine == Engine::Spmp3d)
        .unwrap();
    assert_eq!(s3.images, 3);
    assert!(s3.std_sr > 0.0);
}

#[test]
fn loaded_output_matches_quantized_report() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        cmd_approximate(&RunConfig::resolve(&args("synthetic", &dir.path().join("s"))).unwrap())
            .unwrap();
    let img = load_image(&out.image_path).unwrap();
    assert!(img.image.as_slice().iter().all(|v| v.fract() == 0.0));
}
