//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Run with `cargo test -p artvista-cli --test acceptance`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use artvista_core::regions::chamfer_pole;
use artvista_core::{
    build_template_detailed, compute_label_anchor, generate_sketch, label_regions, merge_small_regions,
    quantize_colors, render_filled_png, synthetic_photo, Connectivity, Contour, Fills, IndexMap, Palette,
    RasterImage, RegionMap, Rgb, SketchLevel, SplitMix64, TemplateOptions, DEFAULT_COLORS, SIMPLIFIED_COLORS,
};
use artvista_genai::BackendConfig;
use artvista_service::session::now;
use artvista_service::store::{new_id, Kind};
use artvista_service::{router, AppState, Fill, PaintSession, Store};
use artvista_testkit::{
    brute_force_two_means_sse, direct_crack_count, exact_clearance, exact_pole_clearance, ink_set, naive_labels,
    naive_merge, unit_edges, weighted_lab_points,
};
use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use tower::ServiceExt;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn quantization_optimality() -> Verdict {
    let start = Instant::now();
    let mut optimal = 0;
    for seed in 0..25u64 {
        let mut rng = SplitMix64::new(seed);
        let n = 3 + rng.next_below(4) as usize;
        let colors: Vec<[u8; 4]> = (0..n)
            .map(|_| {
                let v = rng.next_u64().to_le_bytes();
                [v[0], v[1], v[2], 255]
            })
            .collect();
        let picks: Vec<usize> = (0..16).map(|_| rng.next_below(n as u64) as usize).collect();
        let img = RasterImage::from_fn(4, 4, |x, y| colors[picks[(y * 4 + x) as usize]]).unwrap();
        let q = quantize_colors(&img, 2, seed, 10).map_err(|e| e.to_string())?;
        let (points, weights) = weighted_lab_points(&img);
        let best = if points.len() <= 2 { 0.0 } else { brute_force_two_means_sse(&points, &weights) };
        if q.sse <= best * (1.0 + 1e-9) + 1e-9 {
            optimal += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(optimal >= 24, || format!("{optimal}/25 optimal"))?;
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("{optimal}/25 optimal in {:.1} ms", secs * 1e3))
}

fn lloyd_monotonicity() -> Verdict {
    let (mut violations, mut steps) = (0, 0);
    for seed in 0..100u64 {
        let mut rng = SplitMix64::new(seed);
        let img = RasterImage::from_fn(32, 32, |_, _| {
            let v = rng.next_u64().to_le_bytes();
            [v[0], v[1], v[2], 255]
        })
        .unwrap();
        let q = quantize_colors(&img, DEFAULT_COLORS, seed, 3).map_err(|e| e.to_string())?;
        for trace in &q.traces {
            for w in trace.windows(2) {
                steps += 1;
                if w[1] > w[0] * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, || format!("{violations} increases over {steps} steps"))?;
    Ok(format!("0 increases over {steps} Lloyd steps"))
}

fn region_oracles() -> Verdict {
    let binary: Vec<Vec<u32>> = (0u32..512).map(|b| (0..9).map(|i| b >> i & 1).collect()).collect();
    let seeded: Vec<Vec<u32>> = (0u64..100)
        .map(|seed| {
            let mut rng = SplitMix64::new(0xA11CE ^ seed);
            (0..64).map(|_| rng.next_below(4) as u32).collect()
        })
        .collect();
    let bw = Palette::from_colors(&[Rgb::WHITE, Rgb::BLACK]).unwrap();
    let four = Palette::from_colors(&[Rgb([250, 250, 250]), Rgb([200, 60, 60]), Rgb([60, 60, 200]), Rgb([20, 20, 20])])
        .unwrap();
    let mut maps = 0;
    for (values, side, palette, areas) in binary
        .iter()
        .map(|v| (v, 3usize, &bw, [2u32, 3, 5]))
        .chain(seeded.iter().map(|v| (v, 8usize, &four, [2u32, 4, 8])))
    {
        let im = IndexMap::new(side as u32, side as u32, values.clone()).unwrap();
        for (conn, eight) in [(Connectivity::Four, false), (Connectivity::Eight, true)] {
            let rm = label_regions(&im, conn);
            ensure(rm.region_of == naive_labels(values, side, side, eight), || {
                format!("labels differ on {values:?} ({conn:?})")
            })?;
        }
        let rm = label_regions(&im, Connectivity::Four);
        let labs: Vec<_> = palette.entries().iter().map(|e| e.lab).collect();
        for min_area in areas {
            let merged = merge_small_regions(&rm, palette, min_area).map_err(|e| e.to_string())?;
            merged.validate().map_err(|e| format!("partition broken on {values:?}: {e}"))?;
            let (labels, colors) = naive_merge(values, side, side, &labs, min_area);
            ensure(merged.region_of == labels && merged.index_map().indices == colors, || {
                format!("merge differs from oracle on {values:?}, min_area {min_area}")
            })?;
            ensure(merged.regions.len() == 1 || merged.regions.iter().all(|r| r.area >= min_area), || {
                format!("region under {min_area} px left on {values:?}")
            })?;
            let total: u32 = merged.regions.iter().map(|r| r.area).sum();
            ensure(total as usize == side * side, || format!("areas do not cover {values:?}"))?;
        }
        maps += 1;
    }
    Ok(format!("{maps} maps agree with the flood-fill and relabelling oracles"))
}

fn seeded_regions(seed: u64, w: u32, h: u32) -> (RegionMap, Vec<Vec<Contour>>) {
    let opts = TemplateOptions {
        colors: 6,
        seed,
        min_area_fraction: 0.004,
        ..Default::default()
    };
    let b = build_template_detailed(&synthetic_photo(w, h, seed), &opts).unwrap();
    let contours = b.template.regions.iter().map(|r| r.contours.clone()).collect();
    (b.regions, contours)
}

fn contour_conservation() -> Verdict {
    let mut edges_total = 0;
    for seed in 0..100 {
        let (rm, contours) = seeded_regions(seed, 40, 30);
        let mut directed = HashSet::new();
        for (id, cs) in contours.iter().enumerate() {
            let edges = unit_edges(cs);
            let direct = direct_crack_count(&rm, id as u32);
            ensure(edges.len() as u64 == direct, || {
                format!("seed {seed} region {id}: traced {} vs direct {direct}", edges.len())
            })?;
            edges_total += edges.len();
            for e in edges {
                ensure(directed.insert(e), || format!("seed {seed}: edge {e:?} traced twice"))?;
            }
        }
    }
    Ok(format!("100 templates, {edges_total} crack edges, all counts exact"))
}

fn label_anchors() -> Verdict {
    let (mut checked, mut seed, mut worst) = (0, 0, 0.0f64);
    while checked < 50 {
        let (rm, _) = seeded_regions(seed, 48, 40);
        seed += 1;
        let big = rm.regions.iter().max_by_key(|r| (r.area, std::cmp::Reverse(r.id))).unwrap();
        let pole = chamfer_pole(&rm, big.id).map_err(|e| e.to_string())?;
        ensure(rm.get(pole.x, pole.y) == big.id, || format!("seed {seed}: anchor outside its region"))?;
        let gap = exact_pole_clearance(&rm, big.id) - exact_clearance(&rm, big.id, pole.x, pole.y);
        ensure(gap <= 1.0, || format!("seed {seed}: {gap:.3} px from the exact pole"))?;
        worst = worst.max(gap);
        checked += 1;
    }
    let mut emitted = 0;
    for seed in 0..20 {
        let (rm, _) = seeded_regions(seed, 48, 40);
        for r in &rm.regions {
            if let Some(a) = compute_label_anchor(&rm, r.id).map_err(|e| e.to_string())? {
                ensure(rm.get(a.x, a.y) == r.id, || format!("seed {seed}: anchor of region {} outside", r.id))?;
                emitted += 1;
            }
        }
    }
    Ok(format!("50 regions, worst gap {worst:.3} px; {emitted} emitted anchors all interior"))
}

fn end_to_end_determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("photo.png");
    fs::write(&input, synthetic_photo(512, 512, 2024).encode_png().unwrap()).map_err(|e| e.to_string())?;
    let run = |tag: &str, colors: usize| -> Result<(Vec<Vec<u8>>, f64), String> {
        let outs = ["svg", "json"].map(|ext| dir.path().join(format!("{tag}.{ext}")));
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_artvista"))
            .arg("pbn")
            .arg(&input)
            .args(["--colors", &colors.to_string(), "--seed", "42", "--svg"])
            .arg(&outs[0])
            .arg("--json")
            .arg(&outs[1])
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        ensure(status.success(), || format!("artvista pbn exited with {status}"))?;
        let bytes = outs.iter().map(fs::read).collect::<io::Result<Vec<_>>>().map_err(|e| e.to_string())?;
        Ok((bytes, secs))
    };
    let (a, t16) = run("a", DEFAULT_COLORS)?;
    let (b, _) = run("b", DEFAULT_COLORS)?;
    ensure(a == b, || "two runs with --seed 42 differ".into())?;
    let (_, t8) = run("c", SIMPLIFIED_COLORS)?;
    ensure(t16 < 5.0 && t8 < 5.0, || format!("512x512 took {t16:.2} s (k=16), {t8:.2} s (k=8)"))?;
    Ok(format!("SVG and JSON byte-identical; 512x512 in {t16:.2} s (k=16), {t8:.2} s (k=8)"))
}

fn fill_completeness() -> Verdict {
    let mut compared = 0usize;
    for seed in 0..20 {
        let opts = TemplateOptions {
            colors: 8,
            seed,
            min_area_fraction: 0.002,
            ..Default::default()
        };
        let b = build_template_detailed(&synthetic_photo(72, 56, seed), &opts).unwrap();
        let t = &b.template;
        let fills: Fills = t.regions.iter().map(|r| (r.id, r.number)).collect();
        let filled = render_filled_png(t, &fills).map_err(|e| e.to_string())?;
        let reference = b.regions.index_map().render(&t.palette);
        for y in 0..t.height {
            for x in 0..t.width {
                let r = b.regions.get(x, y);
                let border = (x + 1 < t.width && b.regions.get(x + 1, y) != r)
                    || (y + 1 < t.height && b.regions.get(x, y + 1) != r);
                if !border {
                    ensure(filled.get(x, y) == reference.get(x, y), || format!("seed {seed}: pixel ({x},{y}) differs"))?;
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("20 templates, {compared} non-border pixels identical"))
}

fn sketch_laws() -> Verdict {
    for rgba in [[0, 0, 0, 255], [255; 4], [12, 200, 99, 255], [50, 50, 50, 0]] {
        let img = RasterImage::filled(70, 50, rgba).unwrap();
        for level in SketchLevel::ALL {
            let s = generate_sketch(&img, level, 0).map_err(|e| e.to_string())?;
            ensure(s.strokes.count_below(255) == 0, || format!("{level} marks a blank {rgba:?} image"))?;
        }
    }
    let mut increasing = 0;
    for seed in 0..10 {
        let img = synthetic_photo(256, 192, seed);
        let sketches: Vec<_> = SketchLevel::ALL
            .iter()
            .map(|&l| generate_sketch(&img, l, seed).unwrap())
            .collect();
        let inter: HashSet<usize> = ink_set(&sketches[1].strokes.data).into_iter().collect();
        ensure(ink_set(&sketches[0].strokes.data).iter().all(|p| inter.contains(p)), || {
            format!("photo {seed}: abstract ink outside intermediate")
        })?;
        let d: Vec<f64> = sketches.iter().map(|s| s.ink_density()).collect();
        if d[0] < d[1] && d[1] < d[2] {
            increasing += 1;
        }
    }
    ensure(increasing >= 8, || format!("density increases on {increasing}/10 photos"))?;
    Ok(format!("blank law holds; abstract within intermediate; density increases on {increasing}/10"))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Body, content_type: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", content_type)
        .body(body)
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn service_flow(app: &axum::Router, seed: u64) -> Result<usize, String> {
    let json = |b: &[u8]| serde_json::from_slice::<serde_json::Value>(b).map_err(|e| e.to_string());
    let gen = format!("{{\"prompt\":\"a Japanese tower and mountain in spring\",\"count\":1,\"seed\":{seed}}}");
    let (status, body) = call(app, "POST", "/api/v1/images:generate", Body::from(gen), "application/json").await;
    ensure(status == StatusCode::OK, || format!("generate returned {status}"))?;
    let image_id = json(&body)?["ids"][0].as_str().unwrap().to_string();
    let (_, png) = call(app, "GET", &format!("/api/v1/images/{image_id}"), Body::empty(), "").await;

    let boundary = "acceptance-boundary";
    let mut form = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"image\"; filename=\"ref.png\"\r\n\r\n"
    )
    .into_bytes();
    form.extend_from_slice(&png);
    form.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    let (status, body) = call(
        app,
        "POST",
        &format!("/api/v1/templates?k=8&seed={seed}&min_region_pct=0.2"),
        Body::from(form),
        &format!("multipart/form-data; boundary={boundary}"),
    )
    .await;
    ensure(status == StatusCode::CREATED, || format!("template creation returned {status}"))?;
    let created = json(&body)?;
    let template_id = created["id"].as_str().unwrap().to_string();
    let mut regions: Vec<(u64, u64)> = created["template"]["regions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["id"].as_u64().unwrap(), r["number"].as_u64().unwrap()))
        .collect();
    let colors = created["template"]["palette"].as_array().unwrap().len() as u64;

    let body = format!("{{\"template_id\":\"{template_id}\"}}");
    let (status, body) = call(app, "POST", "/api/v1/sessions", Body::from(body), "application/json").await;
    ensure(status == StatusCode::CREATED, || format!("session creation returned {status}"))?;
    let session = json(&body)?["id"].as_str().unwrap().to_string();

    let mut rng = SplitMix64::new(seed);
    for i in (1..regions.len()).rev() {
        regions.swap(i, rng.next_below(i as u64 + 1) as usize);
    }
    let fill_uri = format!("/api/v1/sessions/{session}/fills");
    let mut progress = 0.0;
    for &(region, number) in &regions {
        for (n, correct) in [(number % colors + 1, colors == 1), (number, true)] {
            let body = format!("{{\"region_id\":{region},\"number\":{n}}}");
            let (status, body) = call(app, "POST", &fill_uri, Body::from(body), "application/json").await;
            ensure(status == StatusCode::OK, || format!("fill returned {status}"))?;
            let s = PaintSession::from_json(&body).map_err(|e| e.to_string())?;
            if !correct {
                ensure(s.progress <= progress, || format!("wrong fill raised progress to {}", s.progress))?;
            }
            progress = s.progress;
        }
    }
    ensure(progress == 1.0, || format!("finished at progress {progress}"))?;
    Ok(regions.len())
}

const CHILD_ENV: &str = "ARTVISTA_ACCEPTANCE_WRITER";

/// Rewrites a few large sessions forever; killed by the parent.
fn writer_child(dir: &str) -> ! {
    let store = Store::open(dir).unwrap();
    let ids: Vec<String> = (0..3).map(|_| new_id()).collect();
    for variant in 0u64.. {
        let mut rng = SplitMix64::new(variant);
        let fills: BTreeMap<u32, Fill> = (0..60_000)
            .map(|r| {
                let number = 1 + rng.next_below(16) as u32;
                (r, Fill { matches_template: number == 1, number })
            })
            .collect();
        let correct = fills.values().filter(|f| f.matches_template).count();
        let t = now();
        let id = &ids[variant as usize % ids.len()];
        let s = PaintSession {
            created_at: t,
            fills,
            id: id.clone(),
            progress: correct as f64 / 60_000.0,
            region_count: 60_000,
            template_id: "0".repeat(32),
            updated_at: t,
        };
        store.write(Kind::Session, id, &s.to_json()).unwrap();
    }
    unreachable!()
}

fn sessions_whole(root: &Path) -> Result<(usize, usize), String> {
    let (mut whole, mut temps) = (0, 0);
    for entry in fs::read_dir(root.join("sessions")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.file_name().unwrap().to_string_lossy().starts_with('.') {
            temps += 1;
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        PaintSession::from_json(&bytes).map_err(|e| format!("torn file {}: {e}", path.display()))?;
        whole += 1;
    }
    Ok((whole, temps))
}

fn service_integration() -> Verdict {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let app = router(AppState::new(Store::open(dir.path()).unwrap(), BackendConfig::mock()));
    let mut filled = 0;
    for seed in 0..3 {
        filled += runtime.block_on(service_flow(&app, seed))?;
    }

    // Every write fails between the durable temp file and the rename.
    let faulty_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let armed = Arc::new(AtomicUsize::new(0));
    let a = armed.clone();
    let store = Store::open(faulty_dir.path())
        .unwrap()
        .with_fault_hook(Arc::new(move |_| match a.load(Ordering::SeqCst) {
            0 => Ok(()),
            _ => Err(io::Error::other("simulated kill before rename")),
        }));
    let faulty = router(AppState::new(store, BackendConfig::mock()));
    runtime.block_on(async {
        let mut form = b"--b\r\nContent-Disposition: form-data; name=\"image\"; filename=\"a.png\"\r\n\r\n".to_vec();
        form.extend_from_slice(&synthetic_photo(64, 48, 1).encode_png().unwrap());
        form.extend_from_slice(b"\r\n--b--\r\n");
        let (_, body) = call(&faulty, "POST", "/api/v1/templates?k=6", Body::from(form), "multipart/form-data; boundary=b").await;
        let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
        let tid = v["id"].as_str().unwrap().to_string();
        let body = format!("{{\"template_id\":\"{tid}\"}}");
        let (_, body) = call(&faulty, "POST", "/api/v1/sessions", Body::from(body), "application/json").await;
        let sid = serde_json::from_slice::<serde_json::Value>(&body).unwrap()["id"].as_str().unwrap().to_string();
        armed.store(1, Ordering::SeqCst);
        for r in v["template"]["regions"].as_array().unwrap() {
            let body = format!("{{\"region_id\":{},\"number\":{}}}", r["id"], r["number"]);
            let (status, _) = call(&faulty, "POST", &format!("/api/v1/sessions/{sid}/fills"), Body::from(body), "application/json").await;
            ensure(status == StatusCode::INTERNAL_SERVER_ERROR, || format!("faulted write returned {status}"))?;
        }
        Ok::<_, String>(())
    })?;
    let (whole, temps) = sessions_whole(faulty_dir.path())?;
    ensure(whole == 1 && temps > 0, || format!("fault injection left {whole} sessions, {temps} temp files"))?;

    // Real SIGKILLs of a writer process.
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let mut rng = SplitMix64::new(5);
    let (mut stored, mut rounds) = (0, 0);
    for _ in 0..8 {
        let kill_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        Store::open(kill_dir.path()).unwrap();
        let mut child = Command::new(&exe)
            .env(CHILD_ENV, kill_dir.path())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?;
        std::thread::sleep(Duration::from_millis(150 + rng.next_below(400)));
        child.kill().map_err(|e| e.to_string())?;
        child.wait().map_err(|e| e.to_string())?;
        stored += sessions_whole(kill_dir.path())?.0;
        rounds += 1;
    }
    ensure(stored > 0, || "killed writers never stored a session".into())?;
    Ok(format!(
        "3 flows reached progress 1.0 over {filled} regions; faulted writes and {rounds} SIGKILL rounds left no torn file"
    ))
}

fn main() -> ExitCode {
    if let Ok(dir) = std::env::var(CHILD_ENV) {
        writer_child(&dir);
    }
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("quantization optimality at toy scale", quantization_optimality),
        ("Lloyd monotonicity", lloyd_monotonicity),
        ("region oracle equivalence", region_oracles),
        ("contour conservation", contour_conservation),
        ("label anchors", label_anchors),
        ("end-to-end determinism and speed", end_to_end_determinism),
        ("fill completeness", fill_completeness),
        ("sketch laws", sketch_laws),
        ("service integration", service_integration),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!("{} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
