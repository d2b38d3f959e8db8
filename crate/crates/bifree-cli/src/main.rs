//! Batch front door for the workbench: JSON in, verification reports and
//! coefficient tables out.
//!
//! Every `verify` run is seeded and echoes its seed, so output is
//! byte-identical across repeated invocations with the same arguments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use bifree_core::chi::{ChiMap, Side};
use bifree_core::matrix::RatMatrix;
use bifree_core::max_order;
use bifree_core::mobius::mobius_closed;
use bifree_core::models::{
    freegroup_distribution, FactorOp, FreeGroupModel, GroupWord, MatrixAlgebra, MonotoneSystem,
    Rep, TracedMatrices, TruncatedFreeProduct,
};
use bifree_core::opval::{
    amplify, check_bifree_opval, check_tensor_factorization, chi_of_operators, doubled_base_space,
    doubled_left_op, doubled_right_op, e_pi, expectation_product, kappa_pi_opval, scalar_space,
    SidedOperator,
};
use bifree_core::partition::{enumerate_bnc, enumerate_family, BiPartition, FamilyTag};
use bifree_core::rat::{format_q, parse_q, q, qi, RatRng, Q};
use bifree_core::scalar::{
    cumulants_to_moments, independence_sum, kac_loeve, moments_to_cumulants, side_patterns_up_to,
    words_up_to, IndependenceMode, Letter, MemoMoments, MomentFunctional, Moments, PairCumulants,
};
use bifree_core::series::{
    bundle_from_cumulants, check_single_variable_relations, sided_decomposition_residual,
    two_variable_transform_residual, vanishing_pure_cumulants,
};
use num::Zero;

#[derive(Parser)]
#[command(name = "bifree", about = "Bi-free combinatorics verification workbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate a partition family over a side map.
    Enum {
        /// Side map as a string over L/R, e.g. LLRLR.
        #[arg(long)]
        chi: String,
        /// Which family to list.
        #[arg(long, value_enum, default_value_t = FamilyArg::Bnc)]
        family: FamilyArg,
    },
    /// Evaluate the lattice Möbius function between two comparable partitions.
    Mobius {
        /// Lower partition: "zero", "one", or blocks like "1,3|2,4".
        #[arg(long)]
        from: String,
        /// Upper partition, same syntax.
        #[arg(long)]
        to: String,
        /// Number of positions (an all-left side map is used).
        #[arg(long)]
        n: Option<usize>,
        /// Explicit side map; overrides --n.
        #[arg(long)]
        chi: Option<String>,
    },
    /// Build the transform dictionary from a pair-cumulant table.
    Transform {
        /// JSON file: {"entries": [{"pattern": "LR", "value": "1/2"}, ...]}.
        #[arg(long)]
        cumulants: PathBuf,
        /// Truncation (total) degree.
        #[arg(long)]
        order: usize,
    },
    /// Tabulate joint moments of a concrete model.
    Model {
        #[command(subcommand)]
        model: ModelCommand,
    },
    /// Run a seeded verification check and report PASS/FAIL.
    Verify {
        /// Which check to run.
        #[arg(value_enum)]
        check: CheckArg,
        /// Seed for all randomness in the check; echoed in the report.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Order bound; each check has a small default.
        #[arg(long)]
        order: Option<usize>,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Operators on a free group acting by the two regular representations.
    Freegroup {
        /// Number of free generators.
        #[arg(long)]
        generators: usize,
        /// JSON file describing the letters; see the README for the schema.
        #[arg(long)]
        letters: PathBuf,
        /// Moment table order.
        #[arg(long)]
        order: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    /// Bi-non-crossing partitions.
    Bnc,
    /// Vertically split partitions.
    BncVs,
    /// Pair partitions of an alternating side map.
    BncB,
    /// Vertically split partitions with the left-connection restriction.
    BncM,
}

impl FamilyArg {
    fn tag(self) -> FamilyTag {
        match self {
            FamilyArg::Bnc => FamilyTag::Bnc,
            FamilyArg::BncVs => FamilyTag::BncVs,
            FamilyArg::BncB => FamilyTag::BncB,
            FamilyArg::BncM => FamilyTag::BncM,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckArg {
    /// All checks below, reported in name order.
    All,
    /// Moment/cumulant Möbius inversion roundtrip on random tables.
    Classify,
    /// Interval-restricted cumulant expansion of alternating square-zero words.
    Boolean,
    /// Monotone-restricted cumulant expansion against an embedding model.
    Monotone,
    /// Rotation of two central-limit pairs, both directions.
    Kacloeve,
    /// Matrix amplification: factorization and preserved vanishing.
    Tensor,
    /// Two-variable moment/cumulant series identity.
    Rtransform,
    /// Sided decomposition of the moment series with binomial weights.
    MixedRtransform,
}

struct Report {
    name: &'static str,
    seed: u64,
    order: usize,
    pass: bool,
    /// Extra fields, rendered after the status; starts with a space when nonempty.
    detail: String,
}

impl Report {
    fn pass(name: &'static str, seed: u64, order: usize, detail: String) -> Self {
        Report { name, seed, order, pass: true, detail }
    }

    fn fail(name: &'static str, seed: u64, order: usize, detail: String) -> Self {
        Report { name, seed, order, pass: false, detail }
    }

    fn line(&self) -> String {
        format!(
            "check={} seed={} order={} status={}{}",
            self.name,
            self.seed,
            self.order,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Enum { chi, family } => {
            let chi = ChiMap::parse(&chi)?;
            guard_order(chi.len())?;
            let fam = enumerate_family(&chi, family.tag())?;
            println!("{}", serde_json::to_string_pretty(&fam.to_json())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Mobius { from, to, n, chi } => {
            let chi = match (chi, n) {
                (Some(s), _) => ChiMap::parse(&s)?,
                (None, Some(n)) => ChiMap::all_left(n)?,
                (None, None) => bail!("need --chi or --n"),
            };
            guard_order(chi.len())?;
            let lo = parse_partition(&from, &chi)?;
            let hi = parse_partition(&to, &chi)?;
            println!("{}", format_q(&mobius_closed(&lo, &hi)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform { cumulants, order } => {
            guard_order(order)?;
            let text = std::fs::read_to_string(&cumulants)
                .with_context(|| format!("reading {}", cumulants.display()))?;
            let file: CumulantFileJson = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", cumulants.display()))?;
            let kappa = file.into_table()?;
            let b = bundle_from_cumulants(&kappa, order)?;
            let out = json!({
                "order": b.order,
                "m_t": b.m_t.to_json("z"),
                "c_t": b.c_t.to_json("z"),
                "r_t": b.r_t.to_json("z"),
                "m_s": b.m_s.to_json("w"),
                "c_s": b.c_s.to_json("w"),
                "r_s": b.r_s.to_json("w"),
                "m_ts": b.m_ts.to_json(),
                "c_ts": b.c_ts.to_json(),
                "r_ts": b.r_ts.to_json(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Model { model } => {
            let ModelCommand::Freegroup { generators, letters, order } = model;
            guard_order(order)?;
            if generators == 0 {
                bail!("need at least one generator");
            }
            let text = std::fs::read_to_string(&letters)
                .with_context(|| format!("reading {}", letters.display()))?;
            let specs: Vec<LetterSpecJson> = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", letters.display()))?;
            let mut model = FreeGroupModel::new();
            let mut syms = Vec::new();
            for s in &specs {
                let letter = s.letter()?;
                model.set(letter.clone(), s.operator_product(generators)?);
                syms.push(letter);
            }
            let dist = freegroup_distribution(&model, &syms, order)?;
            println!("{}", serde_json::to_string_pretty(&dist.to_json())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { check, seed, order } => {
            let reports = run_checks(check, seed, order)?;
            let all_pass = reports.iter().all(|r| r.pass);
            for r in &reports {
                println!("{}", r.line());
            }
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn guard_order(order: usize) -> Result<()> {
    let bound = max_order();
    if order > bound {
        bail!("order {order} exceeds the bound {bound} (override with BIFREE_MAX_ORDER)");
    }
    Ok(())
}

fn parse_partition(s: &str, chi: &ChiMap) -> Result<BiPartition> {
    match s {
        "zero" => Ok(BiPartition::zero(chi.clone())),
        "one" => Ok(BiPartition::one(chi.clone())),
        _ => {
            let blocks = s
                .split('|')
                .map(|b| {
                    b.split(',')
                        .map(|e| e.trim().parse::<usize>().map_err(Into::into))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
                .with_context(|| format!("parsing partition {s:?}"))?;
            Ok(BiPartition::new(chi.clone(), blocks)?)
        }
    }
}

#[derive(Deserialize)]
struct CumulantFileJson {
    entries: Vec<CumulantEntryJson>,
}

#[derive(Deserialize)]
struct CumulantEntryJson {
    pattern: String,
    value: String,
}

impl CumulantFileJson {
    fn into_table(self) -> Result<PairCumulants> {
        let mut kappa = PairCumulants::new();
        for e in &self.entries {
            let pattern = e
                .pattern
                .chars()
                .map(|c| match c {
                    'L' => Ok(Side::Left),
                    'R' => Ok(Side::Right),
                    other => bail!("pattern must use only L and R, found {other:?}"),
                })
                .collect::<Result<Vec<_>>>()?;
            if pattern.is_empty() {
                bail!("empty cumulant pattern");
            }
            kappa.set(pattern, parse_q(&e.value)?);
        }
        Ok(kappa)
    }
}

#[derive(Deserialize)]
struct LetterSpecJson {
    sym: String,
    side: String,
    family: u32,
    ops: Vec<OpSpecJson>,
}

#[derive(Deserialize)]
struct OpSpecJson {
    rep: String,
    /// Group word as (generator, exponent) syllables; generators are 1-based.
    word: Vec<(usize, i64)>,
}

impl LetterSpecJson {
    fn letter(&self) -> Result<Letter> {
        let side = match self.side.as_str() {
            "L" => Side::Left,
            "R" => Side::Right,
            other => bail!("side must be L or R, found {other:?}"),
        };
        Ok(Letter::new(&self.sym, side, self.family))
    }

    fn operator_product(&self, generators: usize) -> Result<Vec<(Rep, GroupWord)>> {
        self.ops
            .iter()
            .map(|o| {
                let rep = match o.rep.as_str() {
                    "lambda" => Rep::Lambda,
                    "rho" => Rep::Rho,
                    other => bail!("rep must be lambda or rho, found {other:?}"),
                };
                let mut w = GroupWord::identity();
                for &(g, e) in &o.word {
                    if g == 0 || g > generators {
                        bail!("generator index {g} out of range 1..={generators}");
                    }
                    w = w.mul(&GroupWord::gen(g - 1, e));
                }
                Ok((rep, w))
            })
            .collect()
    }
}

fn run_checks(check: CheckArg, seed: u64, order: Option<usize>) -> Result<Vec<Report>> {
    let singles = [
        CheckArg::Boolean,
        CheckArg::Classify,
        CheckArg::Kacloeve,
        CheckArg::MixedRtransform,
        CheckArg::Monotone,
        CheckArg::Rtransform,
        CheckArg::Tensor,
    ];
    let selected: Vec<CheckArg> = if check == CheckArg::All {
        singles.to_vec()
    } else {
        vec![check]
    };
    let mut reports = Vec::new();
    for c in selected {
        let n = order.unwrap_or(default_order(c));
        guard_order(n)?;
        reports.push(match c {
            CheckArg::Classify => check_classify(seed, n)?,
            CheckArg::Boolean => check_boolean(seed, n)?,
            CheckArg::Monotone => check_monotone(seed, n)?,
            CheckArg::Kacloeve => check_kacloeve(seed, n)?,
            CheckArg::Tensor => check_tensor(seed, n)?,
            CheckArg::Rtransform => check_rtransform(seed, n)?,
            CheckArg::MixedRtransform => check_mixed_rtransform(seed, n)?,
            CheckArg::All => unreachable!(),
        });
    }
    reports.sort_by_key(|r| r.name);
    Ok(reports)
}

fn default_order(check: CheckArg) -> usize {
    match check {
        CheckArg::Classify => 6,
        CheckArg::Boolean => 3,
        CheckArg::Monotone => 4,
        CheckArg::Kacloeve => 6,
        CheckArg::Tensor => 3,
        CheckArg::Rtransform => 8,
        CheckArg::MixedRtransform => 6,
        CheckArg::All => 0,
    }
}

fn rand_mat(rng: &mut RatRng, d: usize) -> RatMatrix {
    let mut m = RatMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m.set(i, j, rng.next_q());
        }
    }
    m
}

fn mat_json(m: &RatMatrix) -> serde_json::Value {
    json!((0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| format_q(m.get(i, j))).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn word_json(word: &[Letter]) -> serde_json::Value {
    json!(word.iter().map(|l| l.sym.clone()).collect::<Vec<_>>())
}

/// Moment to cumulant and back on seeded random tables; exact roundtrip.
fn check_classify(seed: u64, order: usize) -> Result<Report> {
    let letters = vec![
        Letter::new("T", Side::Left, 1),
        Letter::new("S", Side::Right, 1),
    ];
    for t in 0..3u64 {
        let mut rng = RatRng::new(seed + t);
        let mut mf = MomentFunctional::new(letters.clone(), order);
        for w in words_up_to(&letters, order) {
            if w.is_empty() {
                continue;
            }
            mf.set(w, rng.next_q());
        }
        let kappa = moments_to_cumulants(&mf, &letters, order)?;
        let back = cumulants_to_moments(&kappa, &letters, order)?;
        for w in words_up_to(&letters, order) {
            let expected = mf.moment(&w)?;
            let got = back.moment(&w)?;
            if expected != got {
                let payload = json!({
                    "table_seed": seed + t,
                    "word": word_json(&w),
                    "expected": format_q(&expected),
                    "got": format_q(&got),
                });
                return Ok(Report::fail("classify", seed, order, format!(" counterexample={payload}")));
            }
        }
    }
    Ok(Report::pass("classify", seed, order, String::new()))
}

/// Alternating words of square-zero operators: the expectation equals the
/// pair-partition-restricted cumulant sum, and off-family terms vanish.
fn check_boolean(seed: u64, pairs: usize) -> Result<Report> {
    let space = doubled_base_space(2)?;
    let zero = RatMatrix::zeros(2, 2);
    let s = doubled_right_op(
        &space,
        &[
            vec![zero.clone(), zero.clone()],
            vec![RatMatrix::identity(2), zero.clone()],
        ],
    )?;
    let mut rng = RatRng::new(seed);
    for n in 1..=pairs.max(1) {
        let mut ops = Vec::new();
        for _ in 0..n {
            let z = rand_mat(&mut rng, 2);
            let t = doubled_left_op(
                &space,
                &[vec![zero.clone(), z], vec![zero.clone(), zero.clone()]],
            )?;
            ops.push(t);
            ops.push(s.clone());
        }
        let lhs = expectation_product(&space, &ops)?;
        let chi = ChiMap::alternating(n)?;
        let fam = enumerate_family(&chi, FamilyTag::BncB)?;
        let mut rhs = RatMatrix::zeros(2, 2);
        for pi in &fam.members {
            rhs = rhs.add(&kappa_pi_opval(&space, &ops, pi)?)?;
        }
        if lhs != rhs {
            let payload = json!({
                "pairs": n,
                "expectation": mat_json(&lhs),
                "restricted_sum": mat_json(&rhs),
            });
            return Ok(Report::fail("boolean", seed, pairs, format!(" counterexample={payload}")));
        }
        if n <= 2 {
            for pi in enumerate_bnc(&chi)?.members {
                if fam.members.contains(&pi) {
                    continue;
                }
                let e = e_pi(&space, &ops, &pi)?;
                if !e.is_zero() {
                    let payload = json!({
                        "pairs": n,
                        "partition": pi.to_json(),
                        "value": mat_json(&e),
                    });
                    return Ok(Report::fail("boolean", seed, pairs, format!(" counterexample={payload}")));
                }
            }
        }
    }
    Ok(Report::pass("boolean", seed, pairs, String::new()))
}

/// The embedding model's moments match the monotone-restricted cumulant sum.
fn check_monotone(seed: u64, order: usize) -> Result<Report> {
    let mut rng = RatRng::new(seed);
    let mut sys = MonotoneSystem::new(2)?;
    let mut tm = TracedMatrices::new(MatrixAlgebra::new(2)?);
    let mut letters = Vec::new();
    for (sym, first) in [("A", true), ("B", true), ("C", false), ("D", false)] {
        let z = rand_mat(&mut rng, 2);
        let letter = if first {
            sys.add_first(sym, &z)?
        } else {
            sys.add_second(sym, &z)?
        };
        tm.set(letter.clone(), z)?;
        letters.push(letter);
    }
    let kappa = moments_to_cumulants(&tm, &letters, order)?;
    let memo = MemoMoments::new(sys.moments());
    for w in words_up_to(&letters, order) {
        if w.is_empty() {
            continue;
        }
        let lhs = memo.moment(&w)?;
        let rhs = independence_sum(&kappa, &w, IndependenceMode::Monotone)?;
        if lhs != rhs {
            let payload = json!({
                "word": word_json(&w),
                "moment": format_q(&lhs),
                "restricted_sum": format_q(&rhs),
            });
            return Ok(Report::fail("monotone", seed, order, format!(" counterexample={payload}")));
        }
    }
    Ok(Report::pass("monotone", seed, order, String::new()))
}

/// Rotating two central-limit pairs with equal covariance leaves the rotated
/// pairs cumulant-independent; breaking either hypothesis yields a located
/// nonzero witness.
fn check_kacloeve(seed: u64, order: usize) -> Result<Report> {
    let mut rng = RatRng::new(seed);
    let c = q(3, 5);
    let s = q(4, 5);
    let mut k1 = PairCumulants::new();
    for pat in side_patterns_up_to(2) {
        if pat.len() == 2 {
            k1.set(pat, rng.next_q());
        }
    }
    let k2 = k1.clone();
    let report = kac_loeve(&k1, &k2, &c, &s, order)?;
    if !report.mixed_nonzero.is_empty() || !report.central_limit_equal || report.witness.is_some()
    {
        let payload = json!({
            "direction": "forward",
            "mixed_nonzero": report.mixed_nonzero.len(),
            "central_limit_equal": report.central_limit_equal,
        });
        return Ok(Report::fail("kacloeve", seed, order, format!(" counterexample={payload}")));
    }
    let mut unequal = k1.clone();
    unequal.set(vec![Side::Left, Side::Left], k1.get(&[Side::Left, Side::Left]) + qi(1));
    let report = kac_loeve(&k1, &unequal, &c, &s, order)?;
    let ok_unequal = report.witness.as_ref().is_some_and(|(_, _, v)| !v.is_zero());
    let mut third = k1.clone();
    third.set(vec![Side::Left, Side::Left, Side::Left], qi(1));
    let report3 = kac_loeve(&third, &k2, &c, &s, order)?;
    let ok_third = report3.witness.as_ref().is_some_and(|(_, _, v)| !v.is_zero());
    if !ok_unequal || !ok_third {
        let payload = json!({
            "direction": "reverse",
            "unequal_covariance_witness": ok_unequal,
            "third_order_witness": ok_third,
        });
        return Ok(Report::fail("kacloeve", seed, order, format!(" counterexample={payload}")));
    }
    Ok(Report::pass("kacloeve", seed, order, String::new()))
}

/// Amplification: the block-diagonal factorization of the moment functions,
/// and vanishing of mixed amplified cumulants for product-face inputs.
fn check_tensor(seed: u64, order: usize) -> Result<Report> {
    let mut rng = RatRng::new(seed);
    let len = order.clamp(1, 3);

    let dim = 3;
    let mut unit = vec![Q::zero(); dim];
    unit[0] = qi(1);
    let mut state = vec![Q::zero(); dim];
    state[0] = qi(1);
    let space = scalar_space(unit, state)?;
    let sides = [Side::Left, Side::Right, Side::Left];
    let ops: Vec<SidedOperator> = sides[..len]
        .iter()
        .map(|&side| SidedOperator::new(&space, side, rand_mat(&mut rng, dim)))
        .collect::<bifree_core::Result<_>>()?;
    let amp = amplify(&space, 2)?;
    let chi = chi_of_operators(&ops)?;
    let unit_choices: Vec<Vec<(usize, usize)>> = vec![
        (0..len).map(|k| (1 + k % 2, 1 + (k + 1) % 2)).collect(),
        vec![(1, 1); len],
        (0..len).map(|k| (2 - k % 2, 2)).collect(),
    ];
    for pi in enumerate_bnc(&chi)?.members {
        for units in &unit_choices {
            if !check_tensor_factorization(&amp, &ops, units, &pi)? {
                let payload = json!({
                    "partition": pi.to_json(),
                    "units": units,
                });
                return Ok(Report::fail("tensor", seed, order, format!(" counterexample={payload}")));
            }
        }
    }

    let fp = TruncatedFreeProduct::new(vec![2, 2], 3)?;
    let mut unit = vec![Q::zero(); fp.dim()];
    unit[fp.vacuum_index()] = qi(1);
    let mut state = vec![Q::zero(); fp.dim()];
    state[fp.vacuum_index()] = qi(1);
    let base = scalar_space(unit, state)?;
    let bamp = amplify(&base, 2)?;
    let mut amp_ops = Vec::new();
    for fam in 0..2u32 {
        for rep in [Rep::Lambda, Rep::Rho] {
            let fo = FactorOp {
                factor: fam as usize,
                rep,
                mat: rand_mat(&mut rng, 2),
            };
            let m = fp.op_matrix(&fo)?;
            let entries: Vec<Vec<RatMatrix>> = (0..2)
                .map(|_| (0..2).map(|_| m.scale(&rng.next_q())).collect())
                .collect();
            let so = match rep {
                Rep::Lambda => bamp.embed_left(&entries)?,
                Rep::Rho => bamp.embed_right(&entries)?,
            };
            amp_ops.push((fam + 1, so));
        }
    }
    let bad = check_bifree_opval(bamp.space(), &amp_ops, len)?;
    if let Some((word, value)) = bad.first() {
        let payload = json!({
            "word": word,
            "value": mat_json(value),
        });
        return Ok(Report::fail("tensor", seed, order, format!(" counterexample={payload}")));
    }
    Ok(Report::pass("tensor", seed, order, String::new()))
}

/// Two-variable transform identity on a seeded random cumulant table.
fn check_rtransform(seed: u64, order: usize) -> Result<Report> {
    let mut rng = RatRng::new(seed);
    let mut kappa = PairCumulants::new();
    for pat in side_patterns_up_to(order) {
        if pat.is_empty() {
            continue;
        }
        kappa.set(pat, rng.next_q());
    }
    let b = bundle_from_cumulants(&kappa, order)?;
    let residual = two_variable_transform_residual(&b)?;
    let degree = match residual.max_nonzero_degree() {
        None => "none".to_string(),
        Some(d) => d.to_string(),
    };
    let mut detail = format!(" residual_max_degree={degree}");
    let mut pass = residual.is_zero();
    for (name, series) in check_single_variable_relations(&b)? {
        if !series.is_zero() {
            pass = false;
            detail.push_str(&format!(" nonzero_relation={name:?}"));
        }
    }
    if !pass {
        detail.push_str(&format!(
            " counterexample={}",
            serde_json::to_string(&residual.to_json())?
        ));
        return Ok(Report::fail("rtransform", seed, order, detail));
    }
    Ok(Report::pass("rtransform", seed, order, detail))
}

/// Sided decomposition of the moment series after forcing pure moments to
/// vanish, on a seeded random cumulant table.
fn check_mixed_rtransform(seed: u64, order: usize) -> Result<Report> {
    let mut rng = RatRng::new(seed);
    let mut kappa = PairCumulants::new();
    for pat in side_patterns_up_to(order) {
        if pat.is_empty() {
            continue;
        }
        kappa.set(pat, rng.next_q());
    }
    let adjusted = vanishing_pure_cumulants(&kappa, order)?;
    let residual = sided_decomposition_residual(&adjusted, order)?;
    let degree = match residual.max_nonzero_degree() {
        None => "none".to_string(),
        Some(d) => d.to_string(),
    };
    let mut detail = format!(" residual_max_degree={degree}");
    if !residual.is_zero() {
        detail.push_str(&format!(
            " counterexample={}",
            serde_json::to_string(&residual.to_json())?
        ));
        return Ok(Report::fail("mixed-rtransform", seed, order, detail));
    }
    Ok(Report::pass("mixed-rtransform", seed, order, detail))
}
