use std::error::Error as StdError;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use lumiprobe::envmap::{estimate_envmap, rl_deconvolve_with, saturation_from_ldr, EstimateInput, RlOptions};
use lumiprobe::equirect::DEFAULT_HEIGHT;
use lumiprobe::lights::{detect_lights, match_lights, triangulate_matches, ProbeLights};
use lumiprobe::pfm::{
    normals_to_pfm, probe_from_normals, read_env_map, read_image, read_kernel_params, read_pfm, write_env_map,
    write_image, write_kernel_params, write_pfm,
};
use lumiprobe::scene::{seed_from_env, AcceptanceSpec, LightList, MaterialFile};
use lumiprobe::{
    clip_to_ldr, relight_error, render_probe, rmse, separate_highlights, ssim, Direction, EnvironmentMap, Error,
    Image, RelightSpec, SceneDescription, SeparationProblem, Vec3,
};

use crate::preview::{write_env_png, write_png};
use crate::{
    DeconvArgs, EstimateArgs, EvaluateArgs, LightsArgs, RenderArgs, RoundtripArgs, SeparateArgs, TriangulateArgs,
};

pub type CmdResult = Result<Status, Box<dyn StdError>>;

pub enum Status {
    Done,
    AcceptanceFailed(Vec<String>),
}

/// `r,g,b` or `x,y,z`.
pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|_| format!("invalid number {p:?}"))?;
    }
    Ok(out)
}

pub fn parse_direction(s: &str) -> Result<Direction, String> {
    Direction::try_from(parse_triple(s)?).map_err(|e| e.to_string())
}

fn emit(key: impl Display, value: impl Display) {
    println!("{key}={value}");
}

fn fmt_vec(v: [f64; 3]) -> String {
    format!("{},{},{}", v[0], v[1], v[2])
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn create_dir(path: &Path) -> Result<(), Box<dyn StdError>> {
    fs::create_dir_all(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// `dir/env.pfm` + `traced` → `dir/env.traced.pfm`.
fn sibling(path: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn probe_dir(out: &Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("probe{index}"))
    }
}

/// Shading chromaticity stored as an RGB image; black marks "unknown".
fn shading_image(chroma: &[Option<[f64; 3]>], width: usize, height: usize) -> Image {
    let mut img = Image::rgb(width, height);
    for (p, c) in chroma.iter().enumerate() {
        if let Some(c) = c {
            img.set_rgb(p, *c);
        }
    }
    img
}

fn shading_from_image(img: &Image) -> Vec<Option<[f64; 3]>> {
    (0..img.pixel_count())
        .map(|p| {
            let v = img.rgb_at(p);
            let s = v[0] + v[1] + v[2];
            (s > 0.0).then(|| [v[0] / s, v[1] / s, v[2] / s])
        })
        .collect()
}

pub fn render(args: &RenderArgs) -> CmdResult {
    let scene = SceneDescription::load(&args.scene)?;
    let base = base_dir(&args.scene);
    let seed = scene.seed(seed_from_env());
    let env = scene.environment_map(&base, seed)?;
    let probes = scene.build_probes(&base)?;
    create_dir(&args.out)?;
    write_env_map(&args.out.join("gt_env.pfm"), &env)?;
    write_env_png(&args.out.join("gt_env.png"), &env)?;
    emit("seed", seed);
    emit("env_width", env.width());
    emit("env_height", env.height());
    for (i, (probe, spec)) in probes.iter().zip(&scene.probes).enumerate() {
        let dir = probe_dir(&args.out, i, probes.len());
        create_dir(&dir)?;
        let layers = render_probe(probe, &spec.material, &env, scene.view)?;
        for (name, img) in [
            ("composite", &layers.composite),
            ("diffuse", &layers.diffuse),
            ("highlight", &layers.highlight),
        ] {
            write_image(&dir.join(format!("{name}.pfm")), img)?;
            write_png(&dir.join(format!("{name}.png")), img)?;
        }
        write_pfm(&dir.join("normals.pfm"), &normals_to_pfm(probe))?;
        let chroma: Vec<Option<[f64; 3]>> = (0..probe.pixel_count()).map(|p| layers.shading_rgb(p)).collect();
        write_image(&dir.join("shading.pfm"), &shading_image(&chroma, probe.width, probe.height))?;
        let key = |k: &str| format!("probe{i}.{k}");
        if let Some(clip) = scene.clip_level {
            let ldr = clip_to_ldr(&layers.composite, clip)?;
            write_image(&dir.join("composite_ldr.pfm"), &ldr)?;
            let saturated = (0..ldr.pixel_count()).filter(|&p| ldr.is_saturated(p)).count();
            emit(key("saturated_pixels"), saturated);
        }
        emit(key("silhouette_pixels"), probe.silhouette_count());
        emit(key("max_composite"), layers.composite.pixels.iter().copied().fold(0.0, f64::max));
        emit(key("max_highlight"), layers.highlight.pixels.iter().copied().fold(0.0, f64::max));
    }
    Ok(Status::Done)
}

pub fn separate(args: &SeparateArgs) -> CmdResult {
    let batch = args.inputs.iter().map(|p| read_image(p)).collect::<Result<Vec<_>, _>>()?;
    let mut problem = SeparationProblem::new(batch.clone());
    problem.highlight_color = args.illuminant;
    problem.iteration_budget = args.iterations;
    if let Some(m) = &args.mask {
        let pfm = read_pfm(m)?;
        problem.mask = Some(pfm.data.iter().map(|&v| v != 0.0).collect());
    }
    let write_trace = |records: &[lumiprobe::lowrank::TraceRecord]| -> Result<(), Box<dyn StdError>> {
        if let Some(path) = &args.trace {
            let text: String = records.iter().map(|r| format!("{r}\n")).collect();
            fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        Ok(())
    };
    let out = match separate_highlights(&problem) {
        Ok(out) => out,
        Err(Error::Convergence { trace }) => {
            write_trace(&trace)?;
            return Err(Error::Convergence { trace }.into());
        }
        Err(e) => return Err(e.into()),
    };
    write_trace(&out.trace)?;
    create_dir(&args.out)?;
    for (k, (h, img)) in out.highlights.iter().zip(&batch).enumerate() {
        let mut diffuse = img.clone();
        for (d, hv) in diffuse.pixels.iter_mut().zip(&h.pixels) {
            *d -= hv;
        }
        write_image(&args.out.join(format!("highlight_{k}.pfm")), h)?;
        write_image(&args.out.join(format!("diffuse_{k}.pfm")), &diffuse)?;
        write_png(&args.out.join(format!("highlight_{k}.png")), h)?;
    }
    emit("initial_loss", out.initial_loss);
    emit("final_loss", out.final_loss);
    emit("iterations", out.iterations);
    emit("subgradient_steps", out.subgradient_steps);
    emit("saturated_excluded", out.saturated_excluded.iter().filter(|&&s| s).count());
    Ok(Status::Done)
}

pub fn estimate(args: &EstimateArgs) -> CmdResult {
    let highlight = read_image(&args.highlight)?;
    let normals = read_pfm(&args.normals)?;
    let regions = args.regions.as_deref().map(read_pfm).transpose()?;
    let probe = probe_from_normals(&normals, regions.as_ref(), Vec3::ZERO)?;
    let mat = MaterialFile::load(&args.config)?;
    let material = mat.material();
    let shading = args
        .shading
        .as_deref()
        .map(read_image)
        .transpose()?
        .map(|img| shading_from_image(&img));
    let mut config = mat.estimate.config(args.view, DEFAULT_HEIGHT);
    if let Some(h) = args.map_height {
        config.map_height = h;
    }
    let saturation = args
        .ldr
        .as_deref()
        .map(read_image)
        .transpose()?
        .map(|ldr| saturation_from_ldr(&ldr, config.saturation_threshold));
    let input = EstimateInput {
        highlight: &highlight,
        probe: &probe,
        shading: shading.as_deref(),
        saturation: saturation.as_deref(),
    };
    let est = estimate_envmap(input, &material, &config)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_env_map(&args.out, est.final_map())?;
    write_env_map(&sibling(&args.out, "forward", "pfm"), &est.forward)?;
    write_env_map(&sibling(&args.out, "traced", "pfm"), &est.traced)?;
    write_kernel_params(&sibling(&args.out, "kernel", "pfm"), &est.kernel_params)?;
    write_env_png(&args.out.with_extension("png"), est.final_map())?;
    write_env_png(&sibling(&args.out, "traced", "png"), &est.traced)?;
    emit("coverage", est.traced.coverage_fraction());
    emit("forward_coverage", est.forward.coverage_fraction());
    emit("rl_iterations", est.rl_iterations);
    emit("recolor_fallbacks", est.recolor_fallbacks);
    emit("max_radiance", est.final_map().max_channel_value());
    Ok(Status::Done)
}

pub fn deconv(args: &DeconvArgs) -> CmdResult {
    let traced = read_env_map(&args.input)?;
    let params = read_kernel_params(&args.kernel)?;
    let options = RlOptions {
        iterations: args.iterations,
        ..RlOptions::default()
    };
    let (map, iterations) = rl_deconvolve_with(&traced, &params, &options)?;
    write_env_map(&args.out, &map)?;
    write_env_png(&args.out.with_extension("png"), &map)?;
    emit("rl_iterations", iterations);
    emit("max_radiance", map.max_channel_value());
    Ok(Status::Done)
}

pub fn lights(args: &LightsArgs) -> CmdResult {
    let env = read_env_map(&args.env)?;
    let found = detect_lights(&env, args.nms_deg.to_radians(), args.threshold);
    emit("lights", found.len());
    for (i, l) in found.iter().enumerate() {
        emit(format!("light{i}.direction"), fmt_vec(l.direction.into()));
        emit(format!("light{i}.intensity"), l.intensity);
    }
    let list = LightList::new(args.probe_position.map(Vec3::from_array), found);
    fs::write(&args.out, list.to_json()).map_err(|e| format!("{}: {e}", args.out.display()))?;
    Ok(Status::Done)
}

pub fn triangulate(args: &TriangulateArgs) -> CmdResult {
    let probes = args
        .lights
        .iter()
        .map(|path| {
            let list = LightList::load(path)?;
            let position = list
                .probe_position
                .ok_or_else(|| format!("{}: light list has no probe_position", path.display()))?;
            Ok(ProbeLights {
                position,
                lights: list.lights,
            })
        })
        .collect::<Result<Vec<_>, Box<dyn StdError>>>()?;
    let matching = match_lights(&probes, args.color_tolerance)?;
    let located = triangulate_matches(&probes, &matching)?;
    for (i, p) in matching.pairings.iter().enumerate() {
        emit(format!("pairing{i}.error_rad"), p.error);
        emit(format!("pairing{i}.chosen"), p.chosen);
    }
    emit("lights", located.len());
    for (i, l) in located.iter().enumerate() {
        if let Some(p) = l.position {
            emit(format!("light{i}.position"), fmt_vec(p.to_array()));
        }
        if let Some(r) = l.residual {
            emit(format!("light{i}.residual"), r);
        }
    }
    let list = LightList::new(None, located);
    fs::write(&args.out, list.to_json()).map_err(|e| format!("{}: {e}", args.out.display()))?;
    Ok(Status::Done)
}

pub fn evaluate(args: &EvaluateArgs) -> CmdResult {
    if args.images {
        let a = read_image(&args.gt)?;
        let b = read_image(&args.est)?;
        emit("rmse", rmse(&a, &b, None)?);
        emit("ssim", ssim(&a, &b, args.dynamic_range)?);
        return Ok(Status::Done);
    }
    let gt = read_env_map(&args.gt)?;
    let est = read_env_map(&args.est)?;
    let spec = match &args.normals {
        Some(path) => RelightSpec::with_probe(probe_from_normals(&read_pfm(path)?, None, Vec3::ZERO)?)?,
        None => RelightSpec::spheres(args.resolution)?,
    };
    let r = relight_error(&gt, &est, &spec)?;
    emit("rmse_diffuse", r.rmse_diffuse);
    emit("rmse_glossy", r.rmse_glossy);
    emit("coverage", r.coverage);
    Ok(Status::Done)
}

/// RMSE over covered pixels relative to the RMS of the ground truth there.
fn relative_env_rmse(est: &EnvironmentMap, gt: &EnvironmentMap) -> f64 {
    let (mut se, mut norm) = (0.0, 0.0);
    for k in (0..est.coverage.len()).filter(|&k| est.coverage[k]) {
        for c in 0..3 {
            se += (est.pixels[k][c] - gt.pixels[k][c]).powi(2);
            norm += gt.pixels[k][c].powi(2);
        }
    }
    if norm > 0.0 {
        (se / norm).sqrt()
    } else {
        f64::INFINITY
    }
}

struct ProbeScores {
    rmse_diffuse: f64,
    rmse_glossy: f64,
    coverage: f64,
    env_relative_rmse: f64,
    traced_rmse_diffuse: f64,
    traced_rmse_glossy: f64,
}

fn check(spec: &AcceptanceSpec, probe: usize, s: &ProbeScores) -> Vec<String> {
    let mut failures = Vec::new();
    let mut bound = |name: &str, value: f64, limit: Option<f64>, upper: bool| {
        if let Some(limit) = limit {
            let ok = if upper { value <= limit } else { value >= limit };
            if !ok {
                let rel = if upper { "above" } else { "below" };
                failures.push(format!("probe {probe}: {name} {value} is {rel} {limit}"));
            }
        }
    };
    bound("rmse_diffuse", s.rmse_diffuse, spec.max_rmse_diffuse, true);
    bound("rmse_glossy", s.rmse_glossy, spec.max_rmse_glossy, true);
    bound("coverage", s.coverage, spec.min_coverage, false);
    bound("env_relative_rmse", s.env_relative_rmse, spec.max_env_relative_rmse, true);
    if spec.require_deconvolution_gain
        && !(s.rmse_diffuse < s.traced_rmse_diffuse && s.rmse_glossy < s.traced_rmse_glossy)
    {
        failures.push(format!("probe {probe}: deconvolution did not improve relighting"));
    }
    failures
}

pub fn roundtrip(args: &RoundtripArgs) -> CmdResult {
    let scene = SceneDescription::load(&args.scene)?;
    let base = base_dir(&args.scene);
    let seed = scene.seed(seed_from_env());
    let gt = scene.environment_map(&base, seed)?;
    let probes = scene.build_probes(&base)?;
    let config = scene.estimate.config(scene.view, gt.height());
    let relight = RelightSpec::spheres(64)?;
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_env_map(&out.join("gt_env.pfm"), &gt)?;
    }
    emit("seed", seed);
    let mut failures = Vec::new();
    for (i, (probe, spec)) in probes.iter().zip(&scene.probes).enumerate() {
        let layers = render_probe(probe, &spec.material, &gt, scene.view)?;
        let saturation = scene
            .clip_level
            .map(|clip| clip_to_ldr(&layers.composite, clip).map(|l| saturation_from_ldr(&l, config.saturation_threshold)))
            .transpose()?;
        let shading: Vec<Option<[f64; 3]>> = (0..probe.pixel_count()).map(|p| layers.shading_rgb(p)).collect();
        let input = EstimateInput {
            highlight: &layers.highlight,
            probe,
            shading: Some(&shading),
            saturation: saturation.as_deref(),
        };
        let est = estimate_envmap(input, &spec.material, &config)?;
        let after = relight_error(&gt, est.final_map(), &relight)?;
        let before = relight_error(&gt, &est.traced, &relight)?;
        let scores = ProbeScores {
            rmse_diffuse: after.rmse_diffuse,
            rmse_glossy: after.rmse_glossy,
            coverage: after.coverage,
            env_relative_rmse: relative_env_rmse(est.final_map(), &gt),
            traced_rmse_diffuse: before.rmse_diffuse,
            traced_rmse_glossy: before.rmse_glossy,
        };
        let key = |k: &str| format!("probe{i}.{k}");
        emit(key("rmse_diffuse"), scores.rmse_diffuse);
        emit(key("rmse_glossy"), scores.rmse_glossy);
        emit(key("traced_rmse_diffuse"), scores.traced_rmse_diffuse);
        emit(key("traced_rmse_glossy"), scores.traced_rmse_glossy);
        emit(key("coverage"), scores.coverage);
        emit(key("env_relative_rmse"), scores.env_relative_rmse);
        emit(key("rl_iterations"), est.rl_iterations);
        if let Some(out) = &args.out {
            let dir = probe_dir(out, i, probes.len());
            create_dir(&dir)?;
            write_image(&dir.join("composite.pfm"), &layers.composite)?;
            write_image(&dir.join("highlight.pfm"), &layers.highlight)?;
            write_env_map(&dir.join("env.pfm"), est.final_map())?;
            write_env_map(&dir.join("env.traced.pfm"), &est.traced)?;
            write_env_png(&dir.join("env.png"), est.final_map())?;
        }
        if let Some(acc) = &scene.acceptance {
            failures.extend(check(acc, i, &scores));
        }
    }
    let passed = failures.is_empty();
    if scene.acceptance.is_some() {
        emit("acceptance", if passed { "pass" } else { "fail" });
    }
    Ok(if passed { Status::Done } else { Status::AcceptanceFailed(failures) })
}
