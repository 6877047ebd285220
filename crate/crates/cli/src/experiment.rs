//! One function per experiment kind; each returns its files in memory.

use anyhow::{bail, Result};
use cellscope_core::analysis;
use cellscope_core::classical;
use cellscope_core::observables::{self, Offset};
use cellscope_core::otoc::{self, Observable, ThermalWeight};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, OffsetConfig, ValidationError};
use crate::model::Model;
use crate::output::{render_ppm, OutputFile, SectionGrid, Table};

pub struct Context<'a> {
    pub model: &'a Model,
    pub seed: u64,
}

pub fn run(ctx: &Context<'_>, index: usize, e: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    match e.kind() {
        ExperimentKind::ClassicalSection => classical_section(ctx, index, e),
        ExperimentKind::QuantumSection => quantum_section(ctx, index, e),
        ExperimentKind::OtocCurve => otoc_curve(ctx, index, e),
        ExperimentKind::SpreadMap => spread_map(ctx, index, e),
        ExperimentKind::EntropyCurve => entropy_curve(ctx, index, e),
        ExperimentKind::WidthCurve => width_curve(ctx, index, e),
        ExperimentKind::Ehrenfest => ehrenfest(ctx, index, e),
        ExperimentKind::LyapunovReport => lyapunov_report(ctx, index, e),
    }
}

fn field(index: usize, name: &str) -> String {
    format!("experiment[{index}].{name}")
}

fn header(ctx: &Context<'_>, e: &ExperimentConfig, extra: &[String]) -> Vec<String> {
    let mut h = vec![format!("experiment: {} ({})", e.stem(), e.kind().name())];
    h.extend(ctx.model.header());
    h.extend_from_slice(extra);
    h
}

fn pair_of(pair: &[String; 2]) -> (Observable, Observable) {
    (
        Observable::parse(&pair[0]).expect("validated"),
        Observable::parse(&pair[1]).expect("validated"),
    )
}

fn pair_label(pair: (Observable, Observable)) -> String {
    format!(
        "pair: ({}, {}), first evolved",
        pair.0.name(),
        pair.1.name()
    )
}

fn default_pair() -> [String; 2] {
    ["Q".into(), "P".into()]
}

fn cells(ctx: &Context<'_>, index: usize, e: &ExperimentConfig) -> Result<Vec<usize>> {
    e.points
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            ctx.model
                .cell_at(p, &format!("experiment[{index}].points[{j}]"))
        })
        .collect()
}

fn section_table(
    ctx: &Context<'_>,
    e: &ExperimentConfig,
    extra: &[String],
    values: &[f64],
) -> Table {
    let basis = &ctx.model.basis;
    let u = ctx.model.unit();
    let mut t = Table::new(header(ctx, e, extra), &["m", "n", "Q", "P", "value"]);
    for (cell, &v) in values.iter().enumerate() {
        let (m, n) = basis.grid.split(cell);
        let (q, p) = basis.cell_coords[cell];
        t.push(vec![m as f64, n as f64, q / u, p / u, v]);
    }
    t
}

fn heatmap(ctx: &Context<'_>, values: &[f64], stem: &str) -> OutputFile {
    let g = &ctx.model.basis.grid;
    let u = ctx.model.unit();
    let labels = &ctx.model.basis.cell_coords;
    let range = |f: fn(&(f64, f64)) -> f64| {
        labels
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v / u), b.max(v / u))
            })
    };
    let grid = SectionGrid {
        q_cells: g.q_cells,
        p_cells: g.p_cells,
        values: values.to_vec(),
        q_range: range(|c| c.0),
        p_range: range(|c| c.1),
    };
    OutputFile {
        name: format!("{stem}.ppm"),
        bytes: render_ppm(&grid, 8),
    }
}

fn classical_section(
    ctx: &Context<'_>,
    _index: usize,
    e: &ExperimentConfig,
) -> Result<Vec<OutputFile>> {
    let layout = ctx.model.basis.layout();
    let (lo, hi) = match e.region {
        Some([lo, hi]) => {
            let u = ctx.model.unit();
            ((lo[0] * u, lo[1] * u), (hi[0] * u, hi[1] * u))
        }
        None => layout.bounds(),
    };
    let samples = e.samples.unwrap_or(1000);
    let iterations = e.iterations.unwrap_or(100);
    let stride = e.dt.unwrap_or(1.0);
    let cloud = classical::poincare_section(
        &ctx.model.classical,
        lo,
        hi,
        samples,
        iterations,
        stride,
        ctx.seed,
    )?;
    let mut hits = vec![0usize; layout.grid.cell_count()];
    for &(q, p) in &cloud.points {
        if let Some(c) = layout.cell_containing(q, p) {
            hits[c] += 1;
        }
    }
    let total = cloud.points.len() as f64;
    let values: Vec<f64> = hits.iter().map(|&h| h as f64 / total).collect();
    let extra = [
        format!(
            "samples: {samples}, iterations: {iterations}, stride: {stride}, seed: {}",
            ctx.seed
        ),
        "value: fraction of trajectory points in the cell".to_string(),
    ];
    let stem = e.stem();
    let mut files = vec![section_table(ctx, e, &extra, &values).into_file(format!("{stem}.csv"))?];
    if e.heatmap.unwrap_or(false) {
        files.push(heatmap(ctx, &values, &stem));
    }
    Ok(files)
}

fn quantum_section(
    ctx: &Context<'_>,
    _index: usize,
    e: &ExperimentConfig,
) -> Result<Vec<OutputFile>> {
    let pair = pair_of(e.pair.as_ref().unwrap_or(&default_pair()));
    let (a, b) = (ctx.model.operator(pair.0)?, ctx.model.operator(pair.1)?);
    let n = e.n_steps.expect("validated");
    let ev = ctx.model.evolution(e.dt);
    let image = otoc::quantum_section(&ev, &ctx.model.basis, n, a.operand(), b.operand())?;
    let extra = [
        pair_label(pair),
        format!("t_final: {} ({n} steps)", image.t_final),
        "value: C(t_final) for the cell state".to_string(),
    ];
    let stem = e.stem();
    let mut files =
        vec![section_table(ctx, e, &extra, &image.values).into_file(format!("{stem}.csv"))?];
    if e.heatmap.unwrap_or(true) {
        files.push(heatmap(ctx, &image.values, &stem));
    }
    Ok(files)
}

fn curve_file(
    ctx: &Context<'_>,
    e: &ExperimentConfig,
    extra: Vec<String>,
    times: &[f64],
    values: &[f64],
    name: String,
) -> Result<OutputFile> {
    let mut t = Table::new(header(ctx, e, &extra), &["t", "value"]);
    for (&t_k, &v) in times.iter().zip(values) {
        t.push(vec![t_k, v]);
    }
    t.into_file(name)
}

fn cell_extra(ctx: &Context<'_>, cell: usize) -> String {
    let (q, p) = ctx.model.basis.cell_coords[cell];
    let u = ctx.model.unit();
    format!("cell: {cell} at ({}, {})", q / u, p / u)
}

/// Curves of `C(t, x)` for the given cells plus the requested thermal averages.
struct Curves {
    times: Vec<f64>,
    cells: Vec<Vec<f64>>,
    thermal: Option<Vec<f64>>,
    gibbs: Option<Vec<f64>>,
}

fn otoc_curves(
    ctx: &Context<'_>,
    pair: (Observable, Observable),
    cells: &[usize],
    n_steps: usize,
    dt: Option<f64>,
    thermal: bool,
    temperature: Option<f64>,
) -> Result<Curves> {
    let model = ctx.model;
    let basis = &model.basis;
    let (a, b) = (model.operator(pair.0)?, model.operator(pair.1)?);
    let ev = model.evolution(dt);
    let times: Vec<f64> = (0..=n_steps).map(|k| ev.time(k)).collect();

    let (cell_curves, thermal_curve) = match (model.decomp(), thermal) {
        // state propagation is O(D²) per time, cheaper than evolving operators
        (Some(decomp), false) => {
            let (ad, bd) = (a.dense(basis)?, b.dense(basis)?);
            let curves = cells
                .par_iter()
                .map(|&c| {
                    let w = basis.cell_state(c)?;
                    Ok(otoc::cell_otoc_direct(
                        decomp,
                        1.0,
                        &times,
                        ad.as_ref(),
                        bd.as_ref(),
                        w.as_ref(),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            (curves, None)
        }
        _ => {
            let sweep =
                otoc::cell_frame_sweep(&ev, basis, a.operand(), b.operand(), n_steps, cells)?;
            (
                sweep.curves.into_iter().map(|(_, c)| c).collect(),
                thermal.then_some(sweep.thermal),
            )
        }
    };

    let gibbs = match (temperature, model.decomp()) {
        (Some(temp), Some(decomp)) => {
            let rho = cellscope_core::models::gibbs_state_from_spectrum(decomp, temp)?;
            let (ad, bd) = (a.dense(basis)?, b.dense(basis)?);
            let track = otoc::heisenberg_track(&ev, ad.as_ref(), n_steps, 1)?;
            Some(
                otoc::thermal_otoc(&track, bd.as_ref(), ThermalWeight::Gibbs(rho.as_ref()))?.values,
            )
        }
        _ => None,
    };
    Ok(Curves {
        times,
        cells: cell_curves,
        thermal: thermal_curve,
        gibbs,
    })
}

fn otoc_curve(ctx: &Context<'_>, index: usize, e: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let pair = pair_of(e.pair.as_ref().unwrap_or(&default_pair()));
    let cells = cells(ctx, index, e)?;
    let curves = otoc_curves(
        ctx,
        pair,
        &cells,
        e.n_steps.expect("validated"),
        e.dt,
        e.thermal,
        e.temperature,
    )?;
    let stem = e.stem();
    let mut files = Vec::new();
    for (&cell, values) in cells.iter().zip(&curves.cells) {
        files.push(curve_file(
            ctx,
            e,
            vec![pair_label(pair), cell_extra(ctx, cell)],
            &curves.times,
            values,
            format!("{stem}_cell{cell}.csv"),
        )?);
    }
    if let Some(values) = &curves.thermal {
        files.push(curve_file(
            ctx,
            e,
            vec![
                pair_label(pair),
                "source: infinite-temperature average".into(),
            ],
            &curves.times,
            values,
            format!("{stem}_thermal.csv"),
        )?);
    }
    if let Some(values) = &curves.gibbs {
        files.push(curve_file(
            ctx,
            e,
            vec![
                pair_label(pair),
                format!("source: Gibbs state at T = {}", e.temperature.unwrap()),
            ],
            &curves.times,
            values,
            format!("{stem}_gibbs.csv"),
        )?);
    }
    Ok(files)
}

fn spread_map(ctx: &Context<'_>, index: usize, e: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let model = ctx.model;
    let basis = &model.basis;
    let n = e.n_steps.expect("validated");
    let ev = model.evolution(e.dt);
    let t = ev.time(n);
    let u_cell = otoc::cell_frame_propagator(&ev, basis, n)?;
    let gmap =
        classical::coarse_map_in_cell_frame(&model.classical, &basis.layout(), t, u_cell.as_ref())?;
    let f = otoc::spreading_function(u_cell.as_ref(), &gmap)?;
    let u = model.unit();
    let stem = e.stem();
    cells(ctx, index, e)?
        .into_iter()
        .map(|cell| {
            let field = otoc::spread_field(f.as_ref(), &gmap, basis, cell)?;
            let extra = vec![
                cell_extra(ctx, cell),
                format!("t: {t} ({n} steps)"),
                format!(
                    "classical image cell: {}, transport overlap {:.6}",
                    gmap.target[cell], gmap.magnitude[cell]
                ),
                "weight: |f(g(z), x)|^2 against the displacement of z from x".into(),
            ];
            let mut table = Table::new(header(ctx, e, &extra), &["dQ", "dP", "weight"]);
            for (&(dq, dp), &w) in field.displacement.iter().zip(&field.weights) {
                table.push(vec![dq / u, dp / u, w]);
            }
            table.into_file(format!("{stem}_cell{cell}.csv"))
        })
        .collect()
}

fn entropy_curve(ctx: &Context<'_>, index: usize, e: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let ev = ctx.model.evolution(e.dt);
    let n = e.n_steps.expect("validated");
    let stem = e.stem();
    cells(ctx, index, e)?
        .into_iter()
        .map(|cell| {
            let track = observables::entropy_track(&ev, &ctx.model.basis, cell, n)?;
            curve_file(
                ctx,
                e,
                vec![
                    cell_extra(ctx, cell),
                    "value: cell-population entropy / ln D".into(),
                ],
                &track.times,
                &track.values,
                format!("{stem}_cell{cell}.csv"),
            )
        })
        .collect()
}

fn width_curve(ctx: &Context<'_>, index: usize, e: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let ev = ctx.model.evolution(e.dt);
    let n = e.n_steps.expect("validated");
    let times: Vec<f64> = (0..=n).map(|k| ev.time(k)).collect();
    let stem = e.stem();
    cells(ctx, index, e)?
        .into_iter()
        .map(|cell| {
            let values = otoc::width_track(&ev, &ctx.model.basis, cell, n)?;
            curve_file(
                ctx,
                e,
                vec![
                    cell_extra(ctx, cell),
                    "value: momentum-label variance about the starting cell".into(),
                ],
                &times,
                &values,
                format!("{stem}_cell{cell}.csv"),
            )
        })
        .collect()
}

fn ehrenfest(ctx: &Context<'_>, index: usize, e: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let model = ctx.model;
    let ev = model.evolution(e.dt);
    let n = e.n_steps.expect("validated");
    let u = model.unit();
    let threshold = e.threshold.unwrap_or(5.0);
    let offset = match e.offset.unwrap_or_default() {
        OffsetConfig::Expectation => Offset::Expectation,
        OffsetConfig::MinimalImage => Offset::MinimalImage,
    };
    let stem = e.stem();
    cells(ctx, index, e)?
        .into_iter()
        .map(|cell| {
            let start = match e.start {
                Some([q, p]) => (q * u, p * u),
                None => model.basis.cell_coords[cell],
            };
            let track = observables::ehrenfest_delta(
                &ev,
                &model.basis,
                cell,
                &model.classical,
                start,
                n,
                threshold,
                offset,
            )?;
            let extra = vec![
                cell_extra(ctx, cell),
                format!("classical start: ({}, {})", start.0 / u, start.1 / u),
                format!("offset: {:?}", e.offset.unwrap_or_default()),
                format!(
                    "plateau: {}, threshold: {threshold}x, crossing: {}",
                    track.plateau / u,
                    track.t_e.map_or("none".to_string(), |t| t.to_string())
                ),
            ];
            let mut table = Table::new(
                header(ctx, e, &extra),
                &[
                    "t",
                    "value",
                    "q_classical",
                    "p_classical",
                    "Q_mean",
                    "P_mean",
                ],
            );
            for k in 0..track.times.len() {
                let (cq, cp) = track.classical[k];
                let (qq, qp) = track.quantum[k];
                table.push(vec![
                    track.times[k],
                    track.delta[k] / u,
                    cq / u,
                    cp / u,
                    qq / u,
                    qp / u,
                ]);
            }
            table.into_file(format!("{stem}_cell{cell}.csv"))
        })
        .collect()
}

#[derive(Serialize)]
struct FitReport {
    pair: [String; 2],
    cell: usize,
    exponent: f64,
    stderr: f64,
    r_squared: f64,
    samples: usize,
    relative_to_twice_classical: Option<f64>,
}

#[derive(Serialize)]
struct LyapunovReport {
    version: &'static str,
    classical_exponent: Option<f64>,
    twice_classical: Option<f64>,
    window: [f64; 2],
    width_fit: Option<FitReport>,
    fits: Vec<FitReport>,
}

fn lyapunov_report(
    ctx: &Context<'_>,
    index: usize,
    e: &ExperimentConfig,
) -> Result<Vec<OutputFile>> {
    let model = ctx.model;
    let u = model.unit();
    let classical_exponent = match e.saddle {
        Some([q, p]) => Some(
            classical::saddle_lyapunov(&model.classical, (q * u, p * u))
                .map_err(|err| ValidationError::new(field(index, "saddle"), err.to_string()))?,
        ),
        None => None,
    };
    let twice = classical_exponent.map(|l| 2.0 * l);
    let window = e.window.expect("validated");
    let cells = cells(ctx, index, e)?;
    let n = e.n_steps.expect("validated");
    let mut pairs = e.pairs.clone();
    if let Some(p) = &e.pair {
        pairs.insert(0, p.clone());
    }
    if pairs.is_empty() {
        pairs.push(default_pair());
    }
    let stem = e.stem();
    let mut files = Vec::new();
    let mut fits = Vec::new();
    let report_fit = |pair: [String; 2], cell: usize, fit: analysis::FitResult| FitReport {
        pair,
        cell,
        exponent: fit.exponent,
        stderr: fit.stderr,
        r_squared: fit.r_squared,
        samples: fit.samples,
        relative_to_twice_classical: twice.map(|t| (fit.exponent - t) / t),
    };
    for pair in &pairs {
        let obs = pair_of(pair);
        let curves = otoc_curves(ctx, obs, &cells, n, e.dt, false, None)?;
        for (&cell, values) in cells.iter().zip(&curves.cells) {
            let fit = analysis::fit_exponential(&curves.times, values, (window[0], window[1]))?;
            fits.push(report_fit(pair.clone(), cell, fit));
            files.push(curve_file(
                ctx,
                e,
                vec![pair_label(obs), cell_extra(ctx, cell)],
                &curves.times,
                values,
                format!("{stem}_{}{}_cell{cell}.csv", pair[0], pair[1]),
            )?);
        }
    }
    let ev = model.evolution(e.dt);
    let times: Vec<f64> = (0..=n).map(|k| ev.time(k)).collect();
    let width = otoc::width_track(&ev, &model.basis, cells[0], n)?;
    let width_fit = analysis::fit_exponential(&times, &width, (window[0], window[1]))
        .ok()
        .map(|f| report_fit(["W2".into(), "W2".into()], cells[0], f));
    files.push(curve_file(
        ctx,
        e,
        vec![
            cell_extra(ctx, cells[0]),
            "value: momentum-label variance".into(),
        ],
        &times,
        &width,
        format!("{stem}_width_cell{}.csv", cells[0]),
    )?);
    let report = LyapunovReport {
        version: crate::output::VERSION,
        classical_exponent,
        twice_classical: twice,
        window,
        width_fit,
        fits,
    };
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    files.push(OutputFile {
        name: format!("{stem}.json"),
        bytes,
    });
    Ok(files)
}

/// Checks that need the built model, reported against config field paths.
pub fn validate_against_model(model: &Model, experiments: &[ExperimentConfig]) -> Result<()> {
    for (i, e) in experiments.iter().enumerate() {
        for (j, &p) in e.points.iter().enumerate() {
            model.cell_at(p, &format!("experiment[{i}].points[{j}]"))?;
        }
        for pair in e.pair.iter().chain(&e.pairs) {
            let (a, b) = pair_of(pair);
            for o in [a, b] {
                if let Err(err) = model.operator(o) {
                    if let Some(v) = err.downcast_ref::<ValidationError>() {
                        bail!(ValidationError::new(field(i, "pair"), v.message.clone()));
                    }
                    return Err(err);
                }
            }
        }
        if e.kind() == ExperimentKind::LyapunovReport
            && e.saddle.is_some()
            && model.classical.is_map()
        {
            bail!(ValidationError::new(
                field(i, "saddle"),
                "saddle exponents need a continuous flow",
            ));
        }
    }
    Ok(())
}
