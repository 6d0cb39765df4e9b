use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use cbe_core::dataio::{
    read_codes, read_matrix, read_params, synth_clustered, synth_gaussian, write_codes,
    write_matrix, write_params, ParamsFile,
};
use cbe_core::embedding::{
    encode_matrix, AnyEncoder, Encoder, Method, Preconditioned, Preconditioner,
};
use cbe_core::evaluation::{
    angle_experiment, ground_truth_knn, recall_at_m, timing_bench, write_angle_csv,
    write_recall_csv, write_timing_csv, write_trace_csv, TimingConfig,
};
use cbe_core::optimizer::{train, OptConfig, PairConstraints, SolverMode};
use cbe_core::CbeError;
use thiserror::Error;

use crate::args::{
    BenchArgs, DataKind, EncodeArgs, EvalAngleArgs, EvalRecallArgs, GenDataArgs, Precondition,
    Solver, TrainArgs,
};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CbeError,
    },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core { source, .. } => match source.root() {
                CbeError::InvalidArgument(_) => 1,
                CbeError::Unbounded(_) | CbeError::Numerical(_) => 3,
                _ => 2,
            },
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T>;
}

impl<T> Context<T> for cbe_core::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T> {
        self.map_err(|source| Failure::Core {
            context: what.into(),
            source,
        })
    }
}

fn in_file(path: &Path, source: CbeError) -> CbeError {
    CbeError::File {
        path: path.to_path_buf(),
        source: Box::new(source),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| in_file(path, e.into()))
        .context("--out")
}

fn write_csv(
    out: Option<&PathBuf>,
    write: impl FnOnce(&mut dyn Write) -> cbe_core::Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)
                .and_then(|_| w.flush().map_err(CbeError::from))
                .map_err(|e| in_file(path, e))
                .context("--out")
        }
        None => write(&mut io::stdout().lock()).context("stdout"),
    }
}

pub fn gen_data(a: &GenDataArgs) -> Result<()> {
    let total =
        a.n.checked_add(a.n_queries)
            .ok_or_else(|| Failure::Usage("--n plus --n-queries overflows".into()))?;
    let data = match a.kind {
        DataKind::Gaussian => synth_gaussian(total, a.d, a.seed).context("--kind gaussian")?,
        DataKind::Clustered => {
            synth_clustered(total, a.d, a.clusters, a.spread, a.seed).context("--kind clustered")?
        }
    };
    let db = data
        .select_rows(&(0..a.n).collect::<Vec<_>>())
        .context("--n")?;
    write_matrix(&a.out, &db).context("--out")?;
    if let Some(path) = &a.queries_out {
        let q = data
            .select_rows(&(a.n..total).collect::<Vec<_>>())
            .context("--n-queries")?;
        write_matrix(path, &q).context("--queries-out")?;
    }
    eprintln!("wrote {} x {} rows to {}", a.n, a.d, a.out.display());
    Ok(())
}

pub fn train_cmd(a: &TrainArgs) -> Result<()> {
    if a.method != Method::CbeOpt {
        return Err(Failure::Usage(format!(
            "--method: only cbe-opt is trainable, got {}",
            a.method
        )));
    }
    let x = read_matrix(&a.input).context("--in")?;
    let constraints = match &a.constraints {
        Some(path) => PairConstraints::read(path).context("--constraints")?,
        None => PairConstraints::default(),
    };
    let mut config = OptConfig::new(a.k);
    config.lambda = a.lambda;
    config.mu = a.mu;
    config.max_outer_iters = a.iters;
    config.objective_rel_tol = a.tol;
    config.solver_mode = match a.solver {
        Solver::Radial => SolverMode::RadialExact,
        Solver::Gd => SolverMode::GradientDescent,
    };
    let out = train(&x, &config, &constraints, a.seed).context("train")?;
    write_params(
        &a.out,
        &ParamsFile::circulant(Method::CbeOpt, a.seed, out.params.clone()),
    )
    .context("--out")?;
    let trace_path = a.trace.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".trace.csv");
        p.into()
    });
    write_csv(Some(&trace_path), |w| write_trace_csv(w, &out.trace))?;
    eprintln!(
        "objective {:.6e} -> {:.6e} over {} trace points; trace in {}",
        out.initial_objective(),
        out.final_objective(),
        out.trace.len(),
        trace_path.display()
    );
    Ok(())
}

fn resolve_encoder(a: &EncodeArgs, d: usize) -> Result<(AnyEncoder, u64)> {
    if let Some(path) = &a.params {
        let file = read_params(path).context("--params")?;
        if let Some(m) = a.method.filter(|&m| m != file.method) {
            return Err(Failure::Usage(format!(
                "--method {m} does not match {} in {}",
                file.method,
                path.display()
            )));
        }
        if let Some(k) = a.k.filter(|&k| k != file.k) {
            return Err(Failure::Usage(format!(
                "--k {k} does not match k = {} in {}",
                file.k,
                path.display()
            )));
        }
        let enc = file
            .to_encoder()
            .map_err(|e| in_file(path, e))
            .context("--params")?;
        return Ok((enc, file.seed));
    }
    let seed = a
        .seed
        .ok_or_else(|| Failure::Usage("one of --params or --seed is required".into()))?;
    let method = a
        .method
        .ok_or_else(|| Failure::Usage("--method is required with --seed".into()))?;
    if method == Method::CbeOpt {
        return Err(Failure::Usage(
            "--method cbe-opt needs --params from `cbe train`".into(),
        ));
    }
    let k =
        a.k.ok_or_else(|| Failure::Usage("--k is required with --seed".into()))?;
    let enc = AnyEncoder::random(method, d, k, seed, a.density)
        .context(format!("--method {method} --k {k}"))?;
    Ok((enc, seed))
}

pub fn encode(a: &EncodeArgs) -> Result<()> {
    let x = read_matrix(&a.input).context("--in")?;
    let (enc, seed) = resolve_encoder(a, x.d())?;
    let encoder: Box<dyn Encoder> = match a.precondition {
        Precondition::Off => Box::new(enc),
        Precondition::Block(b) => Box::new(Preconditioned {
            pre: Preconditioner::for_encoder_seed(x.d(), b, seed)
                .context("--precondition")?,
            inner: enc,
        }),
    };
    let codes = encode_matrix(encoder.as_ref(), &x)
        .map_err(|e| in_file(&a.input, e))
        .context("--in")?;
    write_codes(&a.out, &codes).context("--out")?;
    eprintln!(
        "wrote {} codes of {} bits to {}",
        codes.n(),
        codes.k(),
        a.out.display()
    );
    Ok(())
}

pub fn eval_recall(a: &EvalRecallArgs) -> Result<()> {
    let db = read_matrix(&a.db).context("--db")?;
    let queries = read_matrix(&a.queries).context("--queries")?;
    let codes_db = read_codes(&a.codes_db).context("--codes-db")?;
    let codes_q = read_codes(&a.codes_q).context("--codes-q")?;
    for (what, codes, rows) in [
        ("--codes-db", &codes_db, db.n()),
        ("--codes-q", &codes_q, queries.n()),
    ] {
        if codes.n() != rows {
            return Err(Failure::Usage(format!(
                "{what} has {} rows but its matrix has {rows}",
                codes.n()
            )));
        }
    }
    let truth = ground_truth_knn(&db, &queries, a.g).context("--g")?;
    let curve = recall_at_m(&codes_db, &codes_q, &truth, a.m_max)
        .context("--m-max")?
        .labeled(a.label.clone(), f64::NAN);
    write_csv(a.out.as_ref(), |w| {
        write_recall_csv(w, std::slice::from_ref(&curve))
    })?;
    if let Some(r) = curve.at(a.g.min(a.m_max)) {
        eprintln!("recall@{} = {r:.4}", a.g.min(a.m_max));
    }
    Ok(())
}

pub fn eval_angle(a: &EvalAngleArgs) -> Result<()> {
    let mut stats = Vec::with_capacity(a.theta.len() * a.k.len());
    for &theta in &a.theta {
        for &k in &a.k {
            stats.push(
                angle_experiment(theta, a.d, k, a.trials, a.seed)
                    .context(format!("--theta {theta} --k {k}"))?,
            );
        }
    }
    write_csv(a.out.as_ref(), |w| write_angle_csv(w, &stats))
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let config = TimingConfig {
        reps: a.reps,
        dense_budget_bytes: a.dense_budget_mib.saturating_mul(1 << 20),
        extrapolate_dense: !a.no_extrapolate,
        seed: a.seed,
        ..TimingConfig::default()
    };
    let records = timing_bench(&a.d_list, &a.methods, &config).context("--d-list")?;
    write_csv(a.out.as_ref(), |w| write_timing_csv(w, &records))
}
