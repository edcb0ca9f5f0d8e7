use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use sievebias_core::constants;
use sievebias_core::dynsys::{
    self, derive_all_models, derive_model, lambda_table, lambda_to_prime, lambda_value,
    rho_fraction, BasisRow, GapModel,
};
use sievebias_core::fileio::{CensusFile, ModelsFile};
use sievebias_core::gapcycle::{census_stream, generate_cycle, stream_gaps, RunCensus};
use sievebias_core::numfmt::decimals;
use sievebias_core::primecount::{
    pair_census_multi, survival_histogram, team_ratios_empirical, CensusLimit, Convention,
    PairCensus,
};
use sievebias_core::primes::next_prime;
use sievebias_core::residue::{
    expected_ratios, team_ratios_asymptotic, team_ratios_model, TeamTable,
};
use sievebias_core::Limits;

pub struct Ctx {
    pub threads: usize,
    pub limits: Limits,
    pub out_dir: PathBuf,
}

impl Ctx {
    fn resolve(&self, path: &Path) -> Result<PathBuf> {
        let full = if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        };
        if let Some(dir) = full.parent() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
        }
        Ok(full)
    }

    fn write(&self, path: &Path, contents: &str) -> Result<()> {
        let full = self.resolve(path)?;
        fs::write(&full, contents).with_context(|| format!("writing {}", full.display()))?;
        println!("wrote {}", full.display());
        Ok(())
    }
}

pub fn cycle(ctx: &Ctx, p: u64, emit: Option<PathBuf>) -> Result<bool> {
    let materializable = generate_cycle(p, &ctx.limits);
    match (materializable, emit) {
        (Ok(cycle), Some(path)) => {
            let mut out = String::from("i,gap\n");
            for (i, &g) in cycle.gaps().iter().enumerate() {
                writeln!(out, "{i},{g}")?;
            }
            ctx.write(&path, &out)?;
        }
        (Ok(cycle), None) => {
            let max = cycle.gaps().iter().copied().max().unwrap_or(0);
            println!(
                "G({p}#): {} gaps, span {}, max gap {max}",
                cycle.len(),
                cycle.stage.primorial
            );
        }
        (Err(sievebias_core::Error::ResourceLimit { .. }), emit) => {
            // Too large to hold: stream.
            let mut count = 0u64;
            let mut span = 0u64;
            let mut max = 0u32;
            let mut body = emit.is_some().then(|| String::from("i,gap\n"));
            stream_gaps(p, &ctx.limits, |g| {
                if let Some(b) = body.as_mut() {
                    let _ = writeln!(b, "{count},{g}");
                }
                count += 1;
                span += g as u64;
                max = max.max(g);
                ControlFlow::Continue(())
            })?;
            if let (Some(b), Some(path)) = (body, emit) {
                ctx.write(&path, &b)?;
            }
            println!("G({p}#): {count} gaps (streamed), span {span}, max gap {max}");
        }
        (Err(e), _) => return Err(e.into()),
    }
    Ok(true)
}

pub fn census(ctx: &Ctx, p0: u64, gcap: u32, out: &Path) -> Result<bool> {
    let census = census_stream(p0, gcap, ctx.threads, &ctx.limits)?;
    println!(
        "census G({p0}#) g_cap={gcap}: {} gaps, {} cells",
        census.gaps_total(),
        census.iter().count()
    );
    let file = CensusFile::from(&census);
    ctx.write(out, &serde_json::to_string_pretty(&file)?)?;
    Ok(true)
}

fn load_census(path: &Path) -> Result<RunCensus> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: CensusFile = serde_json::from_str(&text)?;
    Ok(file.into_census()?)
}

fn load_models(path: &Path) -> Result<Vec<GapModel>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ModelsFile = serde_json::from_str(&text)?;
    Ok(file.into_models()?)
}

/// Largest even gap the census's anchor can model: min(g_cap, 2 * p1).
fn model_reach(census: &RunCensus) -> u32 {
    let validity = 2 * next_prime(census.stage.p);
    (census.g_cap as u64).min(validity) as u32
}

pub fn model(ctx: &Ctx, census_path: &Path, g: Option<u32>, all: bool, out: &Path) -> Result<bool> {
    let census = load_census(census_path)?;
    let models = if all {
        derive_all_models(&census, model_reach(&census))?
    } else {
        let g = g.context("pass --g <even> or --all")?;
        vec![derive_model(&census, g)?]
    };
    for m in &models {
        if !m.sign_violations.is_empty() {
            eprintln!(
                "warning: gap {} coefficients break sign alternation at j = {:?}",
                m.g, m.sign_violations
            );
        }
    }
    println!(
        "fitted {} model(s) from G({}#)",
        models.len(),
        census.stage.p
    );
    let file = ModelsFile::from_models(&models);
    ctx.write(out, &serde_json::to_string_pretty(&file)?)?;
    Ok(true)
}

pub fn lambda(
    ctx: &Ctx,
    p: Option<u64>,
    invert: Option<f64>,
    anchor: u64,
    limit: u64,
) -> Result<bool> {
    match (p, invert) {
        (Some(p), None) => {
            let l = lambda_value(p, anchor)?;
            match &l.exact {
                Some(exact) => println!(
                    "lambda({p}) = {:.10} = {}/{} (anchor {anchor})",
                    l.value,
                    exact.numer(),
                    exact.denom()
                ),
                None => println!("lambda({p}) = {:.10} (anchor {anchor})", l.value),
            }
        }
        (None, Some(target)) => {
            let limit = limit.min(ctx.limits.sieve_max);
            let inv = lambda_to_prime(target, anchor, limit, ctx.threads, &ctx.limits)?;
            match inv.prime {
                Some(prime) => println!("lambda = {target} first reached at p = {prime}"),
                None => println!(
                    "lambda = {target} extrapolates to p ~ {:.4e} (beyond sieve limit {limit})",
                    inv.p_estimate
                ),
            }
        }
        _ => bail!("pass exactly one of --p or --invert"),
    }
    Ok(true)
}

pub fn rho(ctx: &Ctx, census_path: &Path, p: u64) -> Result<bool> {
    let census = load_census(census_path)?;
    let models = derive_all_models(&census, model_reach(&census))?;
    let report = rho_fraction(&models, p, &ctx.limits)?;
    println!(
        "rho over gaps g <= {} at p = {p}:",
        models.iter().map(|m| m.g).max().unwrap_or(0)
    );
    println!("  direct      = {:.6}", report.direct);
    println!("  lemma       = {:.6}", report.lemma);
    println!("  sum_w       = {:.6}", report.sum_w);
    println!("  universal   = {:.6}", report.universal);
    println!(
        "  coefficient = {:.6} (printed value {})",
        report.coefficient,
        constants::RHO_COEFFICIENT_37_PRINTED
    );
    Ok(true)
}

fn team_table_csv(table: &TeamTable, p_or_inf: &str) -> String {
    let mut out = String::from("r,sigma,W,kind,base,gmax,p_or_inf\n");
    for (&r, sigma) in &table.sigma {
        let w = &table.w[&r];
        let _ = writeln!(
            out,
            "{r},{},{},{},{},{},{p_or_inf}",
            sigma.render(8),
            w.render(8),
            table.kind.name(),
            table.base,
            table.g_max
        );
    }
    out
}

pub fn teams(ctx: &Ctx, args: &crate::TeamsArgs) -> Result<bool> {
    let (table, p_or_inf) = match args.kind.as_str() {
        "expected" => (expected_ratios(args.base)?, "inf".to_string()),
        "asymptotic" => (
            team_ratios_asymptotic(args.base, args.gmax)?,
            "inf".to_string(),
        ),
        "model" => {
            let p = args.p.context("model kind needs --p <prime>")?;
            let models =
                load_models(args.models.as_deref().context("model kind needs --models")?)?;
            (
                team_ratios_model(args.base, args.gmax, &models, p, &ctx.limits)?,
                p.to_string(),
            )
        }
        other => bail!("unknown kind `{other}` (expected | asymptotic | model)"),
    };
    ctx.write(&args.out, &team_table_csv(&table, &p_or_inf))?;
    Ok(true)
}

fn pairs_csv(census: &PairCensus) -> String {
    let mut out = String::from("a,b,count\n");
    for (&(a, b), &n) in &census.cells {
        let _ = writeln!(out, "{a},{b},{n}");
    }
    let _ = writeln!(out, "unclassified,,{}", census.unclassified);
    let _ = writeln!(out, "total,,{}", census.pairs_total);
    let _ = writeln!(out, "convention,,{}", census.convention.id());
    out
}

pub fn census_primes(
    ctx: &Ctx,
    base: u64,
    pairs: Option<u64>,
    xmax: Option<u64>,
    convention: Option<&str>,
    out: &Path,
) -> Result<bool> {
    let convention = match convention {
        Some(s) => Convention::parse(s)?,
        None => match (pairs, xmax) {
            (Some(_), None) => Convention::LeftPastBase,
            (None, Some(_)) => Convention::RightBelow,
            _ => bail!("pass exactly one of --pairs or --xmax"),
        },
    };
    let limit = match (pairs, xmax, convention) {
        (Some(n), None, Convention::RightBelow) => {
            bail!("right-below needs --xmax, got --pairs {n}")
        }
        (Some(n), None, _) => CensusLimit::Pairs(n),
        (None, Some(x), Convention::RightBelow) => CensusLimit::UpperBound(x),
        (None, Some(x), c) => bail!("{} needs --pairs, got --xmax {x}", c.id()),
        _ => bail!("pass exactly one of --pairs or --xmax"),
    };
    let census = pair_census_multi(base, &[(convention, limit)], ctx.threads, &ctx.limits)?
        .pop()
        .unwrap();
    println!(
        "census base {base} [{}]: {} pairs, {} classified, last prime {}",
        convention.id(),
        census.pairs_total,
        census.classified(),
        census.last_prime
    );
    if let Ok(table) = team_ratios_empirical(&census) {
        for (&r, w) in &table.w {
            println!("  W_{r} = {}", w.render(4));
        }
    }
    ctx.write(out, &pairs_csv(&census))?;
    Ok(true)
}

fn survival_csv(hist: &sievebias_core::primecount::SurvivalHistogram, limits: &Limits) -> Result<String> {
    let lambdas: BTreeMap<u64, f64> = lambda_table(hist.p_max, limits)?.into_iter().collect();
    let mut out = String::from("p_k,lambda,lo,hi,count\n");
    for b in &hist.buckets {
        let _ = writeln!(out, "{},{:.8},{},{},{}", b.p_k, lambdas[&b.p_k], b.lo, b.hi, b.count);
    }
    Ok(out)
}

pub fn survival(ctx: &Ctx, pmax: u64, out: &Path) -> Result<bool> {
    let hist = survival_histogram(pmax, ctx.threads, &ctx.limits)?;
    println!(
        "survival histogram to {pmax}: {} stages, {} primes total",
        hist.buckets.len(),
        hist.total()
    );
    ctx.write(out, &survival_csv(&hist, &ctx.limits)?)?;
    Ok(true)
}

pub fn reproduce_table1(ctx: &Ctx, pairs: u64) -> Result<bool> {
    let full_run = pairs == 100_000_000;
    if !full_run {
        // Truncated run: census under the resolved convention, partition
        // report only, no published-table diff.
        let census = pair_census_multi(
            10,
            &[(Convention::LeftPastBase, CensusLimit::Pairs(pairs))],
            ctx.threads,
            &ctx.limits,
        )?
        .pop()
        .unwrap();
        println!(
            "truncated run: {} pairs, {} classified + {} unclassified (partitioned: {})",
            census.pairs_total,
            census.classified(),
            census.unclassified,
            census.classified() + census.unclassified == census.pairs_total
        );
        return Ok(census.classified() + census.unclassified == census.pairs_total);
    }
    if ctx.limits.sieve_max < 2_100_000_000 {
        bail!(
            "reproducing the published table needs a sieve budget >= 2.1e9, got {}",
            ctx.limits.sieve_max
        );
    }
    let specs: Vec<(Convention, CensusLimit)> = Convention::ALL
        .iter()
        .map(|&c| match c {
            Convention::RightBelow => (
                c,
                CensusLimit::UpperBound(constants::X0_100M_ODD_PRIME),
            ),
            _ => (c, CensusLimit::Pairs(pairs)),
        })
        .collect();
    let censuses = pair_census_multi(10, &specs, ctx.threads, &ctx.limits)?;
    let published: BTreeMap<(u64, u64), u64> = constants::TABLE1_CELLS.into_iter().collect();

    let mut resolved: Option<&PairCensus> = None;
    let mut all_ok = true;
    for census in &censuses {
        let max_diff: i64 = published
            .iter()
            .map(|(k, &want)| {
                (census.cells.get(k).copied().unwrap_or(0) as i64 - want as i64).abs()
            })
            .max()
            .unwrap_or(0);
        let exact = max_diff == 0;
        println!(
            "{:<17} max cell diff {max_diff}{}",
            census.convention.id(),
            if exact { "  <- exact match" } else { "" }
        );
        if exact && resolved.is_none() {
            resolved = Some(census);
        }
        if max_diff > 3 {
            println!("  (exceeds the +-3 window for adjacent conventions)");
            all_ok = false;
        }
    }
    let Some(census) = resolved else {
        println!("no convention matches every published cell");
        return Err(sievebias_core::Error::NoConventionMatch.into());
    };
    println!("resolved convention: {}", census.convention.id());

    let mut report = String::from("a,b,count,published,diff\n");
    for (&(a, b), &want) in &published {
        let got = census.cells.get(&(a, b)).copied().unwrap_or(0);
        let _ = writeln!(report, "{a},{b},{got},{want},{}", got as i64 - want as i64);
        if got != want {
            all_ok = false;
        }
    }
    let sigma_total: u64 = census.sigma.values().sum();
    if sigma_total != pairs {
        println!("sigma total {sigma_total} != {pairs}");
        all_ok = false;
    }
    let table = team_ratios_empirical(census)?;
    for (r, want_sigma) in constants::TABLE1_SIGMA {
        let got = census.sigma.get(&r).copied().unwrap_or(0);
        let ok = got == want_sigma;
        all_ok &= ok;
        println!(
            "sigma_{r} = {got} (published {want_sigma}) {}",
            if ok { "ok" } else { "MISMATCH" }
        );
    }
    for (r, want_w) in constants::TABLE1_W {
        let got = format!("{:.4}", table.w_f64(r).unwrap_or(f64::NAN));
        let ok = got == want_w;
        all_ok &= ok;
        println!(
            "W_{r} = {got} (published {want_w}) {}",
            if ok { "ok" } else { "MISMATCH" }
        );
    }
    ctx.write(Path::new("table1_report.csv"), &report)?;
    println!(
        "table 1 reproduction: {}",
        if all_ok { "PASS" } else { "FAIL" }
    );
    Ok(all_ok)
}

/// Geometric stage grid from the anchor down to lambda_min.
fn stage_grid(p0: u64, lambda_min: f64, points: usize, ctx: &Ctx) -> Result<Vec<u64>> {
    let anchor = dynsys::LAMBDA_ANCHOR.max(p0);
    let ctx_limit = 10_000_000u64.min(ctx.limits.sieve_max);
    let lctx = dynsys::LambdaContext::new(dynsys::LAMBDA_ANCHOR, ctx_limit, ctx.threads, &ctx.limits)?;
    let hi = match lctx.invert(lambda_min)? {
        dynsys::Inversion { prime: Some(p), .. } => p,
        inv => inv.p_estimate.min(ctx_limit as f64) as u64,
    };
    let mut stages = vec![p0];
    if anchor > p0 {
        stages.push(anchor);
    }
    let ratio = ((hi as f64) / (anchor as f64)).powf(1.0 / points.max(2) as f64);
    let mut t = anchor as f64;
    loop {
        t *= ratio;
        if t >= hi as f64 {
            break;
        }
        let cand = next_prime(t as u64);
        if cand > *stages.last().unwrap() && cand < hi {
            stages.push(cand);
        }
    }
    if hi > *stages.last().unwrap() {
        stages.push(hi);
    }
    Ok(stages)
}

/// Basis rows per distinct model anchor, one sieve pass per anchor.
fn rows_by_anchor(
    models: &[GapModel],
    stages: &[u64],
    limits: &Limits,
) -> Result<BTreeMap<u64, Vec<BasisRow>>> {
    let mut out = BTreeMap::new();
    for m in models {
        let j = models
            .iter()
            .filter(|mm| mm.p0 == m.p0)
            .map(|mm| mm.j_max)
            .max()
            .unwrap();
        if !out.contains_key(&m.p0) {
            let usable: Vec<u64> = stages.iter().copied().filter(|&s| s >= m.p0).collect();
            let table = dynsys::basis_table(m.p0, j, &usable, limits)?;
            out.insert(m.p0, table.rows);
        }
    }
    Ok(out)
}

fn row_for<'a>(rows: &'a BTreeMap<u64, Vec<BasisRow>>, p0: u64, stage: u64) -> Option<&'a BasisRow> {
    rows[&p0].iter().find(|r| r.p_k == stage)
}

pub fn figures(ctx: &Ctx, args: &crate::FiguresArgs) -> Result<bool> {
    let validity = 2 * next_prime(args.p0);
    let g_cap = args.gcap.unwrap_or(validity as u32);
    let g_max = args
        .gmax
        .unwrap_or_else(|| (((validity - 2) / 30) * 30).max(30));
    println!(
        "figures: p0={} g_cap={g_cap} g_max={g_max} bases={:?}",
        args.p0, args.bases
    );
    let census = census_stream(args.p0, g_cap, ctx.threads, &ctx.limits)?;
    let models = derive_all_models(&census, model_reach(&census))?;
    let stages = stage_grid(args.p0, args.lambda_min, args.points, ctx)?;
    let rows = rows_by_anchor(&models, &stages, &ctx.limits)?;

    // Relative-population curves, plus asymptotic rows at lambda = 0.
    let mut w_curves = String::from("stage,lambda,g,w\n");
    for &s in &stages {
        for m in &models {
            if let Some(row) = row_for(&rows, m.p0, s) {
                let _ = writeln!(w_curves, "{s},{:.8},{},{:.8}", row.lambda37, m.g, m.eval_row(row));
            }
        }
    }
    for m in &models {
        let _ = writeln!(
            w_curves,
            "inf,0.00000000,{},{}",
            m.g,
            decimals(&m.const_term, 8)
        );
    }
    ctx.write(Path::new("w_curves.csv"), &w_curves)?;

    // Team ratio curves per base.
    let mut team_curves = String::from("stage,lambda,base,r,W\n");
    for &base in &args.bases {
        let roster = sievebias_core::residue::gap_roster(base, g_max)?;
        for &s in &stages {
            if models.iter().any(|m| s < m.p0) {
                continue; // boundary-gap model anchors one stage later
            }
            let mut sigma: BTreeMap<u64, f64> = BTreeMap::new();
            for (&r, gaps) in &roster {
                let mut total = 0.0;
                for &g in gaps {
                    let m = models
                        .iter()
                        .find(|m| m.g as u64 == g)
                        .ok_or(sievebias_core::Error::IncompleteRoster(g))?;
                    total += m.eval_row(row_for(&rows, m.p0, s).unwrap());
                }
                sigma.insert(r, total);
            }
            let lambda = rows[&models[0].p0]
                .iter()
                .find(|r| r.p_k == s)
                .map(|r| r.lambda37)
                .unwrap_or(f64::NAN);
            let s_ref = sigma[&(2 % base)];
            for (&r, &sg) in &sigma {
                let _ = writeln!(team_curves, "{s},{lambda:.8},{base},{r},{:.8}", sg / s_ref);
            }
        }
        let asym = team_ratios_asymptotic(base, g_max)?;
        for (&r, w) in &asym.w {
            let _ = writeln!(team_curves, "inf,0.00000000,{base},{r},{}", w.render(8));
        }
    }
    ctx.write(Path::new("team_curves.csv"), &team_curves)?;

    // Coverage curve.
    let mut rho_curve = String::from("lambda,rho\n");
    for &s in &stages {
        if models.iter().any(|m| s < m.p0) {
            continue;
        }
        let mut sum_w = 0.0;
        let mut lambda = f64::NAN;
        let mut total_w = f64::NAN;
        for m in &models {
            let row = row_for(&rows, m.p0, s).unwrap();
            sum_w += m.eval_row(row);
            lambda = row.lambda37;
            total_w = row.total_w;
        }
        let _ = writeln!(rho_curve, "{lambda:.8},{:.8}", sum_w / total_w);
    }
    rho_curve.push_str("0.00000000,0.00000000\n");
    ctx.write(Path::new("rho_curve.csv"), &rho_curve)?;

    if !args.skip_survival {
        let hist = survival_histogram(args.pmax, ctx.threads, &ctx.limits)?;
        ctx.write(Path::new("survival_hist.csv"), &survival_csv(&hist, &ctx.limits)?)?;
    }
    Ok(true)
}
