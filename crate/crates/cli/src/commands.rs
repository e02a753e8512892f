//! Subcommand execution. Every diagnostic is computed once per parameter
//! point into [`Evaluation`]; single runs render it as full tables, sweeps
//! flatten it into one row of scalars plus long-format row tables.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use skinlab_core::spectral::{median, LocalizationRegime};
use skinlab_core::*;

use crate::config::{BuilderKind, Command, ComplexValue, Diagnostic, RunConfig};
use crate::csv::{write_table, Cell, Provenance, Table};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub workers: usize,
}

impl Context {
    pub fn new(out: impl Into<PathBuf>, workers: usize) -> Self {
        Self {
            out: out.into(),
            workers: workers.max(1),
        }
    }
}

pub fn effective_hamiltonian(
    config: &RunConfig,
    bc: BoundaryCondition,
) -> CliResult<EffectiveHamiltonian> {
    let b = config.bravais()?;
    let flux = config.flux_spec()?;
    let s = &config.strip;
    let h = match config.run.builder {
        BuilderKind::Hofstadter => {
            let cut = strip_parameters(&b, s.p, s.q)?;
            hofstadter_nonreciprocal(&config.hofstadter()?, &b, &cut, &flux, s.k_x, s.length, bc)?
        }
        BuilderKind::Diagonal => {
            reciprocal_diagonal(&config.diagonal()?, &b, &flux, s.k_x, s.length, bc)?
        }
        BuilderKind::Generic => {
            let cut = strip_parameters(&b, s.p, s.q)?;
            assemble(&config.lattice_model()?, &cut, &flux, s.k_x, s.length, bc)?
        }
    };
    Ok(h)
}

fn strip_cut(config: &RunConfig) -> CliResult<StripCut> {
    let b = config.bravais()?;
    let (p, q) = match config.run.builder {
        BuilderKind::Diagonal => (1, 1),
        _ => (config.strip.p, config.strip.q),
    };
    Ok(strip_parameters(&b, p, q)?)
}

/// Flux per plaquette `Phi = B * cell area`.
pub fn plaquette_flux(config: &RunConfig) -> CliResult<f64> {
    Ok(config.flux_spec()?.value() * config.bravais()?.cell_area())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Period of the diagonal-cut chain: the denominator of `Phi`.
fn chain_period(config: &RunConfig) -> CliResult<usize> {
    if let Some(q) = config.transfer.q {
        return Ok(q);
    }
    let flux = config.flux_spec()?;
    let area = config.bravais()?.cell_area();
    let rounded = area.round();
    match flux.rational_tag() {
        Some((n, d)) if (area - rounded).abs() < 1e-12 && rounded >= 1.0 => {
            let num = n * rounded as i64;
            Ok((d / gcd(num, d)) as usize)
        }
        _ => Err(CliError::Invalid(
            "transfer: set transfer.q or give a rational flux".into(),
        )),
    }
}

fn require(config: &RunConfig, builder: BuilderKind, diagnostic: Diagnostic) -> CliResult<()> {
    if config.run.builder == builder {
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "{diagnostic} needs builder = \"{}\"",
            builder.name()
        )))
    }
}

#[derive(Debug, Clone)]
pub struct WindingRow {
    pub base_energy: ComplexValue,
    pub result: std::result::Result<WindingResult, String>,
}

#[derive(Debug, Clone)]
pub struct LyapunovRow {
    pub energy: ComplexValue,
    pub result: std::result::Result<LyapunovEstimate, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct DetValue {
    pub q: usize,
    pub phi: f64,
    pub log_abs: f64,
}

/// Everything computed for one parameter point.
#[derive(Debug, Default)]
pub struct Evaluation {
    pub hamiltonian: Option<EffectiveHamiltonian>,
    pub spectrum: Option<SpectralResult>,
    pub partner: Option<SpectralResult>,
    pub comparison: Option<SpectralComparison>,
    pub criterion: Option<CriterionVerdict>,
    pub local_ratios: Option<Vec<LocalRatio>>,
    pub spectral_area: Option<f64>,
    pub winding_bloch: Option<Vec<WindingRow>>,
    pub winding_flux: Option<Vec<WindingRow>>,
    pub winding_realspace: Option<Vec<WindingRow>>,
    pub det: Option<DetValue>,
    pub identity_gap: Option<(usize, f64, IdentityGap)>,
    pub lyapunov: Option<Vec<LyapunovRow>>,
    pub distribution2d: Option<Distribution2D>,
    pub edge_weight: Option<EdgeWeight>,
}

fn windings(
    energies: &[ComplexValue],
    mut f: impl FnMut(Complex64) -> skinlab_core::Result<WindingResult>,
) -> Vec<WindingRow> {
    energies
        .iter()
        .map(|&e| WindingRow {
            base_energy: e,
            result: f(e.into()).map_err(|err| err.to_string()),
        })
        .collect()
}

pub fn evaluate(config: &RunConfig, diagnostics: &[Diagnostic]) -> CliResult<Evaluation> {
    use Diagnostic::*;
    let wanted: BTreeSet<Diagnostic> = diagnostics.iter().copied().collect();
    let has = |d: Diagnostic| wanted.contains(&d);
    let mut ev = Evaluation::default();
    let bc = config.strip.boundary.condition();

    if has(Spectrum) || has(Distribution) || has(Ipr) || has(Matrix) || has(Compare) {
        let h = effective_hamiltonian(config, bc)?;
        if has(Spectrum) || has(Distribution) || has(Ipr) || has(Compare) {
            ev.spectrum = Some(diagonalize(&h)?);
        }
        ev.hamiltonian = Some(h);
    }
    if has(Compare) {
        let other = match bc {
            BoundaryCondition::Open => BoundaryCondition::Periodic,
            _ => BoundaryCondition::Open,
        };
        let partner = diagonalize(&effective_hamiltonian(config, other)?)?;
        let primary = ev.spectrum.as_ref().expect("spectrum computed for compare");
        let (obc, pbc) = if bc == BoundaryCondition::Open {
            (primary, &partner)
        } else {
            (&partner, primary)
        };
        ev.comparison = Some(compare_spectra(obc, pbc, config.transfer.edge_budget)?);
        ev.partner = Some(partner);
    }
    if has(Criterion) {
        require(config, BuilderKind::Hofstadter, Criterion)?;
        ev.criterion = Some(localization_criterion(&config.hofstadter()?));
    }
    if has(LocalRatio) {
        require(config, BuilderKind::Diagonal, LocalRatio)?;
        let (p, b, f) = (config.diagonal()?, config.bravais()?, config.flux_spec()?);
        let ratios = (1..=config.strip.length as i64)
            .map(|n| local_ratio(&p, &b, &f, config.strip.k_x, n))
            .collect::<skinlab_core::Result<Vec<_>>>()?;
        ev.local_ratios = Some(ratios);
    }
    if has(SpectralArea) {
        ev.spectral_area = Some(spectral_area(
            &config.lattice_model()?,
            config.transfer.area_resolution,
        )?);
    }

    let energies = &config.winding.base_energies;
    if has(WindingBloch) {
        let table = BlochTable::new(
            &config.lattice_model()?,
            &strip_cut(config)?,
            &config.flux_spec()?,
            config.strip.k_x,
        )?;
        let samples = config.winding.bloch_samples;
        ev.winding_bloch = Some(windings(energies, |e| {
            skinlab_core::spectral::winding_bloch_with(&table, e, samples)
        }));
    }
    if has(WindingFlux) {
        let samples = config.winding.flux_samples;
        // surface assembly errors before looping over energies
        effective_hamiltonian(config, BoundaryCondition::Twisted(0.0))?;
        ev.winding_flux = Some(windings(energies, |e| {
            winding_flux(
                |phi| {
                    effective_hamiltonian(config, BoundaryCondition::Twisted(phi)).map_err(|err| {
                        match err {
                            CliError::Core(core) => core,
                            other => skinlab_core::Error::InvalidArgument(other.to_string()),
                        }
                    })
                },
                e,
                samples,
            )
        }));
    }
    if has(WindingRealspace) {
        let h = effective_hamiltonian(config, BoundaryCondition::Open)?;
        ev.winding_realspace = Some(windings(energies, |e| winding_realspace(&h, e)));
    }

    if has(Det) || has(IdentityGap) {
        require(
            config,
            BuilderKind::Diagonal,
            if has(Det) { Det } else { IdentityGap },
        )?;
        let (p, b, f) = (config.diagonal()?, config.bravais()?, config.flux_spec()?);
        let q = chain_period(config)?;
        let phi = plaquette_flux(config)?;
        if has(Det) {
            let chain = gauge_transform(&p, &b, &f, config.strip.k_x)?;
            ev.det = Some(DetValue {
                q,
                phi,
                log_abs: log_det_magnitude(&chain, q)?,
            });
        }
        if has(IdentityGap) {
            ev.identity_gap = Some((
                q,
                phi,
                integral_identity_gap(&p, &b, &f, config.strip.k_x, q)?,
            ));
        }
    }
    if has(Lyapunov) {
        let (b, f, k_x, len) = (
            config.bravais()?,
            config.flux_spec()?,
            config.strip.k_x,
            config.transfer.lyapunov_length,
        );
        let rows: Vec<LyapunovRow> = match config.run.builder {
            BuilderKind::Hofstadter => {
                let chain = HarperChain::new(&config.hofstadter()?, &b, &f, k_x)?;
                lyapunov_rows(config, |e| lyapunov_exponent(&chain, e, len))
            }
            BuilderKind::Diagonal => {
                let chain = gauge_transform(&config.diagonal()?, &b, &f, k_x)?;
                lyapunov_rows(config, |e| lyapunov_exponent(&chain, e, len))
            }
            BuilderKind::Generic => {
                return Err(CliError::Invalid(
                    "lyapunov needs the hofstadter or diagonal builder".into(),
                ))
            }
        };
        ev.lyapunov = Some(rows);
    }

    if has(Distribution2d) || has(Spectrum2d) || has(EdgeWeight) {
        let geometry = config
            .geometry
            .as_ref()
            .ok_or_else(|| CliError::Invalid("2D diagnostics need a [geometry] section".into()))?;
        let mask = geometry.mask()?;
        let hops: NearestNeighborHops = match config.run.builder {
            BuilderKind::Hofstadter => (&config.hofstadter()?).into(),
            BuilderKind::Diagonal => (&config.diagonal()?).into(),
            BuilderKind::Generic => {
                return Err(CliError::Invalid(
                    "2D geometry needs the hofstadter or diagonal builder".into(),
                ))
            }
        };
        let matrix = build_masked_hamiltonian(&hops, &config.flux_spec()?, &mask)?;
        let dist = distribution_map(&matrix, &mask)?;
        if has(EdgeWeight) {
            ev.edge_weight = Some(edge_weight_fraction(&dist, geometry.band)?);
        }
        ev.distribution2d = Some(dist);
    }
    Ok(ev)
}

fn lyapunov_rows(
    config: &RunConfig,
    f: impl Fn(Complex64) -> skinlab_core::Result<LyapunovEstimate>,
) -> Vec<LyapunovRow> {
    config
        .transfer
        .energies
        .iter()
        .map(|&e| LyapunovRow {
            energy: e,
            result: f(e.into()).map_err(|err| err.to_string()),
        })
        .collect()
}

fn spectrum_table(name: &str, r: &SpectralResult) -> Table {
    let mut t = Table::new(name, &["index", "re", "im", "ipr"]);
    for (i, (e, p)) in r.eigenvalues().iter().zip(r.ipr()).enumerate() {
        t.push(vec![i.into(), e.re.into(), e.im.into(), (*p).into()]);
    }
    t
}

fn winding_table(name: &str, rows: &[WindingRow]) -> Table {
    let mut t = Table::new(
        name,
        &["E_B_re", "E_B_im", "raw", "quantized", "residual", "error"],
    );
    for row in rows {
        let mut cells: Vec<Cell> = vec![row.base_energy.re.into(), row.base_energy.im.into()];
        match &row.result {
            Ok(w) => cells.extend([
                w.value.into(),
                w.quantized.into(),
                w.residual.into(),
                Cell::Empty,
            ]),
            Err(e) => cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, e.clone().into()]),
        }
        t.push(cells);
    }
    t
}

fn regime_label(r: LocalizationRegime) -> &'static str {
    match r {
        LocalizationRegime::Skin => "skin",
        LocalizationRegime::BulkLocalized => "bulk-localized",
        LocalizationRegime::NearCritical => "near-critical",
    }
}

/// Full tables for a single run, in a fixed order.
pub fn tables(ev: &Evaluation, diagnostics: &[Diagnostic], config: &RunConfig) -> Vec<Table> {
    use Diagnostic::*;
    let wanted: BTreeSet<Diagnostic> = diagnostics.iter().copied().collect();
    let mut out = Vec::new();
    for d in wanted {
        match d {
            Spectrum => {
                if let Some(r) = &ev.spectrum {
                    let mut t = spectrum_table("spectrum", r);
                    t.note("boundary", config.strip.boundary.condition().label());
                    t.note("max_residual", crate::csv::format_float(r.max_residual()));
                    out.push(t);
                }
            }
            Distribution => {
                if let Some(r) = &ev.spectrum {
                    let mut t = Table::new("distribution", &["n", "I_n"]);
                    for (n, v) in r.mean_distribution().iter().enumerate() {
                        t.push(vec![(n + 1).into(), (*v).into()]);
                    }
                    out.push(t);
                }
            }
            Ipr => {
                if let Some(r) = &ev.spectrum {
                    let mut t = Table::new("ipr", &["index", "ipr"]);
                    for (i, p) in r.ipr().iter().enumerate() {
                        t.push(vec![i.into(), (*p).into()]);
                    }
                    t.note("median_ipr", crate::csv::format_float(r.median_ipr()));
                    out.push(t);
                }
            }
            Matrix => {
                if let Some(h) = &ev.hamiltonian {
                    let mut t = Table::new("matrix", &["row", "col", "re", "im"]);
                    for (i, j, z) in h.nonzero_entries() {
                        t.push(vec![
                            (i + 1).into(),
                            (j + 1).into(),
                            z.re.into(),
                            z.im.into(),
                        ]);
                    }
                    t.note("boundary", h.bc().label());
                    out.push(t);
                }
            }
            Compare => {
                if let (Some(c), Some(p)) = (&ev.comparison, &ev.partner) {
                    let mut partner = spectrum_table("spectrum_partner", p);
                    let other = if config.strip.boundary.condition() == BoundaryCondition::Open {
                        "pbc"
                    } else {
                        "obc"
                    };
                    partner.name = format!("spectrum_{other}");
                    partner.note("boundary", other);
                    out.push(partner);
                    let mut t = Table::new(
                        "compare",
                        &[
                            "verdict",
                            "distance",
                            "obc_to_pbc",
                            "pbc_to_obc",
                            "diameter",
                            "edge_budget",
                            "threshold",
                        ],
                    );
                    t.push(vec![
                        c.verdict.label().into(),
                        c.distance.into(),
                        c.directed[0].into(),
                        c.directed[1].into(),
                        c.diameter.into(),
                        c.edge_budget.into(),
                        c.threshold.into(),
                    ]);
                    out.push(t);
                }
            }
            Criterion => {
                if let Some(c) = &ev.criterion {
                    let mut t = Table::new("criterion", &["margin", "regime"]);
                    t.push(vec![c.margin.into(), regime_label(c.regime).into()]);
                    out.push(t);
                }
            }
            LocalRatio => {
                if let Some(ratios) = &ev.local_ratios {
                    let mut t = Table::new("local_ratio", &["n", "ratio", "pole"]);
                    for (n, r) in ratios.iter().enumerate() {
                        t.push(vec![
                            (n + 1).into(),
                            r.value().into(),
                            r.value().is_none().into(),
                        ]);
                    }
                    out.push(t);
                }
            }
            SpectralArea => {
                if let Some(a) = ev.spectral_area {
                    let mut t = Table::new("spectral_area", &["resolution", "area"]);
                    t.push(vec![config.transfer.area_resolution.into(), a.into()]);
                    out.push(t);
                }
            }
            WindingBloch => out.extend(
                ev.winding_bloch
                    .as_deref()
                    .map(|r| winding_table("winding_bloch", r)),
            ),
            WindingFlux => out.extend(
                ev.winding_flux
                    .as_deref()
                    .map(|r| winding_table("winding_flux", r)),
            ),
            WindingRealspace => out.extend(
                ev.winding_realspace
                    .as_deref()
                    .map(|r| winding_table("winding_realspace", r)),
            ),
            Det => {
                if let Some(d) = ev.det {
                    let mut t = Table::new("det", &["q", "phi", "det_abs", "log_det_abs"]);
                    t.push(vec![
                        d.q.into(),
                        d.phi.into(),
                        d.log_abs.exp().into(),
                        d.log_abs.into(),
                    ]);
                    out.push(t);
                }
            }
            IdentityGap => {
                if let Some((q, phi, g)) = &ev.identity_gap {
                    let mut t = Table::new(
                        "identity_gap",
                        &["q", "phi", "gap", "sum_left", "sum_right", "mean_integral"],
                    );
                    t.push(vec![
                        (*q).into(),
                        (*phi).into(),
                        g.gap.into(),
                        g.sums[0].into(),
                        g.sums[1].into(),
                        g.mean_integral.into(),
                    ]);
                    out.push(t);
                }
            }
            Lyapunov => {
                if let Some(rows) = &ev.lyapunov {
                    let mut t = Table::new(
                        "lyapunov",
                        &[
                            "energy_re",
                            "energy_im",
                            "exponent",
                            "stderr",
                            "segments",
                            "converged",
                            "error",
                        ],
                    );
                    for row in rows {
                        let mut cells: Vec<Cell> = vec![row.energy.re.into(), row.energy.im.into()];
                        match &row.result {
                            Ok(l) => cells.extend([
                                l.exponent.into(),
                                l.stderr.into(),
                                l.segments.into(),
                                l.converged.into(),
                                Cell::Empty,
                            ]),
                            Err(e) => cells.extend([
                                Cell::Empty,
                                Cell::Empty,
                                Cell::Empty,
                                Cell::Empty,
                                e.clone().into(),
                            ]),
                        }
                        t.push(cells);
                    }
                    t.note("length", config.transfer.lyapunov_length);
                    out.push(t);
                }
            }
            Distribution2d => {
                if let Some(d) = &ev.distribution2d {
                    let mut t = Table::new("distribution2d", &["X", "Y", "I"]);
                    for (&(x, y), v) in d.mask().sites().iter().zip(d.values()) {
                        t.push(vec![x.into(), y.into(), (*v).into()]);
                    }
                    out.push(t);
                    out.push(grid_table(d));
                }
            }
            Spectrum2d => {
                if let Some(d) = &ev.distribution2d {
                    let mut t = Table::new("spectrum2d", &["index", "re", "im"]);
                    for (i, e) in d.spectrum().iter().enumerate() {
                        t.push(vec![i.into(), e.re.into(), e.im.into()]);
                    }
                    out.push(t);
                }
            }
            EdgeWeight => {
                if let Some(w) = &ev.edge_weight {
                    let mut t = Table::new(
                        "edge_weight",
                        &[
                            "band",
                            "band_sites",
                            "fraction",
                            "baseline",
                            "enhancement",
                            "band_exceeds_lattice",
                        ],
                    );
                    let band = config.geometry.as_ref().map_or(0, |g| g.band);
                    t.push(vec![
                        band.into(),
                        w.band_sites.into(),
                        w.fraction.into(),
                        w.baseline.into(),
                        w.enhancement().into(),
                        w.band_exceeds_lattice.into(),
                    ]);
                    out.push(t);
                }
            }
        }
    }
    out
}

/// Dense `Y` by `X` grid of the distribution; cells outside the mask are
/// left empty.
fn grid_table(d: &Distribution2D) -> Table {
    let sites = d.mask().sites();
    let (x0, x1) = sites
        .iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let (y0, y1) = sites
        .iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    let mut columns = vec!["Y".to_string()];
    columns.extend((x0..=x1).map(|x| format!("X{x}")));
    let mut t = Table::with_columns("distribution2d_grid", columns);
    for y in y0..=y1 {
        let mut row: Vec<Cell> = vec![y.into()];
        row.extend((x0..=x1).map(|x| d.at(x, y).into()));
        t.push(row);
    }
    t
}

pub fn provenance(command: Command, config: &RunConfig) -> CliResult<Provenance> {
    let mut p = Provenance::new(command.name(), config)?;
    p.line("builder", config.run.builder.name());
    let m = &config.model;
    match config.run.builder {
        BuilderKind::Hofstadter => p.line(
            "params",
            format!("j_x={} j_y={} h_x={} h_y={}", m.j_x, m.j_y, m.h_x, m.h_y),
        ),
        BuilderKind::Diagonal => p.line(
            "params",
            format!(
                "kappa_x={}{:+}i kappa_y={}{:+}i",
                m.kappa_x.re, m.kappa_x.im, m.kappa_y.re, m.kappa_y.im
            ),
        ),
        BuilderKind::Generic => p.line("params", format!("{} hops", m.hops.len())),
    }
    let l = &config.lattice;
    p.line(
        "lattice",
        format!("a_x={} a_y={} alpha={}", l.a_x, l.a_y, l.alpha),
    );
    let flux = config.flux_spec()?;
    let tag = flux
        .rational_tag()
        .map(|(n, d)| format!(" ({n}/{d})"))
        .unwrap_or_default();
    p.line(
        "flux",
        format!(
            "B={}{tag} Phi={}",
            flux.value(),
            flux.value() * config.bravais()?.cell_area()
        ),
    );
    match (&config.geometry, command) {
        (Some(g), Command::Geometry2d) => p.line("shape", g.describe()),
        _ => {
            let s = &config.strip;
            let (cp, cq) = if config.run.builder == BuilderKind::Diagonal {
                (1, 1)
            } else {
                (s.p, s.q)
            };
            p.line(
                "strip",
                format!(
                    "p={cp} q={cq} length={} boundary={} k_x={}",
                    s.length,
                    s.boundary.condition().label(),
                    s.k_x
                ),
            );
        }
    }
    Ok(p)
}

/// Run one of the single-point subcommands and write its files.
pub fn run(command: Command, config: &RunConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    if command == Command::Sweep {
        return sweep(config, ctx);
    }
    let diagnostics = config.diagnostics_for(command);
    let prov = provenance(command, config)?;
    if diagnostics.is_empty() {
        let mut t = Table::new(command.name(), &["diagnostic"]);
        t.note("diagnostics", "none");
        return Ok(vec![write_table(&ctx.out, &prov, &t)?]);
    }
    let ev = evaluate(config, &diagnostics)?;
    tables(&ev, &diagnostics, config)
        .iter()
        .map(|t| write_table(&ctx.out, &prov, t))
        .collect()
}

/// Scalar columns one diagnostic contributes to a sweep row.
fn scalar_columns(d: Diagnostic) -> &'static [&'static str] {
    use Diagnostic::*;
    match d {
        Spectrum | Matrix | Spectrum2d | Distribution2d => &[],
        Distribution => &["edge_pileup", "argmax_n"],
        Ipr => &["median_ipr"],
        Compare => &["verdict", "distance"],
        Criterion => &["margin", "regime"],
        LocalRatio => &["max_abs_log_ratio"],
        SpectralArea => &["area"],
        WindingBloch => &["winding_bloch_raw", "winding_bloch"],
        WindingFlux => &["winding_flux_raw", "winding_flux"],
        WindingRealspace => &["winding_realspace_raw", "winding_realspace"],
        Det => &["q", "phi", "det_abs"],
        IdentityGap => &["gap_q", "gap"],
        Lyapunov => &["lyapunov", "lyapunov_stderr"],
        EdgeWeight => &["edge_fraction", "edge_enhancement"],
    }
}

fn first_winding(rows: &Option<Vec<WindingRow>>, problems: &mut Vec<String>) -> Vec<Cell> {
    match rows.as_ref().and_then(|r| r.first()).map(|r| &r.result) {
        Some(Ok(w)) => vec![w.value.into(), w.quantized.into()],
        Some(Err(e)) => {
            problems.push(e.clone());
            vec![Cell::Empty, Cell::Empty]
        }
        None => vec![Cell::Empty, Cell::Empty],
    }
}

fn scalars(ev: &Evaluation, d: Diagnostic, problems: &mut Vec<String>) -> Vec<Cell> {
    use Diagnostic::*;
    match d {
        Spectrum | Matrix | Spectrum2d | Distribution2d => vec![],
        Distribution => match &ev.spectrum {
            Some(r) => {
                let md = r.mean_distribution();
                let argmax = (0..md.len())
                    .max_by(|&i, &j| md[i].total_cmp(&md[j]))
                    .unwrap_or(0);
                vec![(md[argmax] / median(md)).into(), (argmax + 1).into()]
            }
            None => vec![Cell::Empty; 2],
        },
        Ipr => vec![ev.spectrum.as_ref().map(|r| r.median_ipr()).into()],
        Compare => match &ev.comparison {
            Some(c) => vec![c.verdict.label().into(), c.distance.into()],
            None => vec![Cell::Empty; 2],
        },
        Criterion => match &ev.criterion {
            Some(c) => vec![c.margin.into(), regime_label(c.regime).into()],
            None => vec![Cell::Empty; 2],
        },
        LocalRatio => {
            let worst = ev.local_ratios.as_ref().map(|rs| {
                rs.iter()
                    .map(|r| r.value().map(|v| v.ln().abs()))
                    .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
            });
            match worst {
                Some(Some(v)) => vec![v.into()],
                Some(None) => {
                    problems.push("local_ratio: pole".into());
                    vec![Cell::Empty]
                }
                None => vec![Cell::Empty],
            }
        }
        SpectralArea => vec![ev.spectral_area.into()],
        WindingBloch => first_winding(&ev.winding_bloch, problems),
        WindingFlux => first_winding(&ev.winding_flux, problems),
        WindingRealspace => first_winding(&ev.winding_realspace, problems),
        Det => match ev.det {
            Some(d) => vec![d.q.into(), d.phi.into(), d.log_abs.exp().into()],
            None => vec![Cell::Empty; 3],
        },
        IdentityGap => match &ev.identity_gap {
            Some((q, _, g)) => vec![(*q).into(), g.gap.into()],
            None => vec![Cell::Empty; 2],
        },
        Lyapunov => match ev
            .lyapunov
            .as_ref()
            .and_then(|r| r.first())
            .map(|r| &r.result)
        {
            Some(Ok(l)) => vec![l.exponent.into(), l.stderr.into()],
            Some(Err(e)) => {
                problems.push(e.clone());
                vec![Cell::Empty; 2]
            }
            None => vec![Cell::Empty; 2],
        },
        EdgeWeight => match &ev.edge_weight {
            Some(w) => vec![w.fraction.into(), w.enhancement().into()],
            None => vec![Cell::Empty; 2],
        },
    }
}

/// Cartesian product of the axes, last axis fastest.
pub fn sweep_grid(config: &RunConfig) -> CliResult<Vec<Vec<f64>>> {
    let mut grid: Vec<Vec<f64>> = vec![vec![]];
    for axis in &config.sweep {
        let values = axis.grid()?;
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(grid)
}

struct PointOutcome {
    scalars: Vec<Cell>,
    error: Option<String>,
    spectrum: Vec<Vec<Cell>>,
    partner: Vec<Vec<Cell>>,
    distribution: Vec<Vec<Cell>>,
    spectrum2d: Vec<Vec<Cell>>,
    distribution2d: Vec<Vec<Cell>>,
}

fn evaluate_point(
    config: &RunConfig,
    point: &[f64],
    diagnostics: &[Diagnostic],
    width: usize,
) -> PointOutcome {
    let mut outcome = PointOutcome {
        scalars: vec![Cell::Empty; width],
        error: None,
        spectrum: vec![],
        partner: vec![],
        distribution: vec![],
        spectrum2d: vec![],
        distribution2d: vec![],
    };
    let mut local = config.clone();
    for (axis, &v) in config.sweep.iter().zip(point) {
        match local.with_parameter(axis.parameter, v) {
            Ok(c) => local = c,
            Err(e) => {
                outcome.error = Some(e.to_string());
                return outcome;
            }
        }
    }
    let ev = match evaluate(&local, diagnostics) {
        Ok(ev) => ev,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };
    let mut problems = Vec::new();
    outcome.scalars = diagnostics
        .iter()
        .flat_map(|&d| scalars(&ev, d, &mut problems))
        .collect();
    if !problems.is_empty() {
        outcome.error = Some(problems.join("; "));
    }
    let spectrum_rows = |r: &SpectralResult| -> Vec<Vec<Cell>> {
        r.eigenvalues()
            .iter()
            .zip(r.ipr())
            .enumerate()
            .map(|(i, (e, p))| vec![i.into(), e.re.into(), e.im.into(), (*p).into()])
            .collect()
    };
    if diagnostics.contains(&Diagnostic::Spectrum) {
        if let Some(r) = &ev.partner {
            outcome.partner = spectrum_rows(r);
        }
    }
    if let Some(r) = &ev.spectrum {
        if diagnostics.contains(&Diagnostic::Spectrum) {
            outcome.spectrum = spectrum_rows(r);
        }
        if diagnostics.contains(&Diagnostic::Distribution) {
            outcome.distribution = r
                .mean_distribution()
                .iter()
                .enumerate()
                .map(|(n, v)| vec![(n + 1).into(), (*v).into()])
                .collect();
        }
    }
    if let Some(d) = &ev.distribution2d {
        if diagnostics.contains(&Diagnostic::Spectrum2d) {
            outcome.spectrum2d = d
                .spectrum()
                .iter()
                .enumerate()
                .map(|(i, e)| vec![i.into(), e.re.into(), e.im.into()])
                .collect();
        }
        if diagnostics.contains(&Diagnostic::Distribution2d) {
            outcome.distribution2d = d
                .mask()
                .sites()
                .iter()
                .zip(d.values())
                .map(|(&(x, y), v)| vec![x.into(), y.into(), (*v).into()])
                .collect();
        }
    }
    outcome
}

/// Evaluate every grid point (in parallel) and collate in grid order.
pub fn sweep(config: &RunConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    if config.sweep.is_empty() {
        return Err(CliError::Invalid(
            "sweep needs at least one [[sweep]] axis".into(),
        ));
    }
    let mut diagnostics = config.diagnostics_for(Command::Sweep);
    diagnostics.sort();
    diagnostics.dedup();
    if diagnostics.contains(&Diagnostic::Matrix) {
        return Err(CliError::Invalid(
            "the matrix diagnostic is not available in sweeps".into(),
        ));
    }
    let grid = sweep_grid(config)?;
    let axis_names: Vec<String> = config
        .sweep
        .iter()
        .map(|a| a.parameter.name().to_string())
        .collect();
    let scalar_names: Vec<String> = diagnostics
        .iter()
        .flat_map(|&d| scalar_columns(d).iter().map(|s| s.to_string()))
        .collect();
    let width = scalar_names.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build()
        .map_err(|e| CliError::Invalid(format!("worker pool: {e}")))?;
    let outcomes: Vec<PointOutcome> = pool.install(|| {
        grid.par_iter()
            .map(|p| evaluate_point(config, p, &diagnostics, width))
            .collect()
    });

    let prefix = |i: usize, point: &[f64]| -> Vec<Cell> {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(point.iter().map(|&v| Cell::from(v)));
        row
    };
    let mut columns = vec!["point".to_string()];
    columns.extend(axis_names.iter().cloned());
    let long = |name: &str, tail: &[&str]| {
        let mut cols = columns.clone();
        cols.extend(tail.iter().map(|s| s.to_string()));
        Table::with_columns(name, cols)
    };

    let mut summary = {
        let mut cols = columns.clone();
        cols.extend(scalar_names);
        cols.push("error".into());
        Table::with_columns("sweep", cols)
    };
    summary.note(
        "diagnostics",
        diagnostics
            .iter()
            .map(|d| d.name())
            .collect::<Vec<_>>()
            .join(" "),
    );
    summary.note("points", grid.len());
    let mut spectrum = long("sweep_spectrum", &["index", "re", "im", "ipr"]);
    let other = if config.strip.boundary.condition() == BoundaryCondition::Open {
        "pbc"
    } else {
        "obc"
    };
    let mut partner = long(
        &format!("sweep_spectrum_{other}"),
        &["index", "re", "im", "ipr"],
    );
    let mut distribution = long("sweep_distribution", &["n", "I_n"]);
    let mut spectrum2d = long("sweep_spectrum2d", &["index", "re", "im"]);
    let mut distribution2d = long("sweep_distribution2d", &["X", "Y", "I"]);

    for (i, (point, o)) in grid.iter().zip(outcomes).enumerate() {
        let mut row = prefix(i, point);
        row.extend(o.scalars);
        row.push(o.error.into());
        summary.push(row);
        for (table, rows) in [
            (&mut spectrum, o.spectrum),
            (&mut partner, o.partner),
            (&mut distribution, o.distribution),
            (&mut spectrum2d, o.spectrum2d),
            (&mut distribution2d, o.distribution2d),
        ] {
            for tail in rows {
                let mut row = prefix(i, point);
                row.extend(tail);
                table.push(row);
            }
        }
    }

    let prov = provenance(Command::Sweep, config)?;
    let mut written = vec![write_table(&ctx.out, &prov, &summary)?];
    if diagnostics.contains(&Diagnostic::Spectrum) && diagnostics.contains(&Diagnostic::Compare) {
        written.push(write_table(&ctx.out, &prov, &partner)?);
    }
    for (d, table) in [
        (Diagnostic::Spectrum, &spectrum),
        (Diagnostic::Distribution, &distribution),
        (Diagnostic::Spectrum2d, &spectrum2d),
        (Diagnostic::Distribution2d, &distribution2d),
    ] {
        if diagnostics.contains(&d) {
            written.push(write_table(&ctx.out, &prov, table)?);
        }
    }
    Ok(written)
}

/// Run each command listed in `[run] commands`, in order.
pub fn run_all(config: &RunConfig, ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for &command in &config.run.commands {
        files.extend(run(command, config, ctx)?);
    }
    Ok(files)
}

pub fn output_dir(config: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.run.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}
