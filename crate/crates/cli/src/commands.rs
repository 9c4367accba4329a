use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use nextok_core::bpe::{train_bpe_from_lines, BpeModel, TokenSequence};
use nextok_core::corpus::{build_corpus, read_corpus_lines, split_corpus, CorpusFile};
use nextok_core::harness::{complete_repl, evaluate, oov_experiment, oov_table, Checkpoint};
use nextok_core::model::ModelKind;
use nextok_core::nn::Hyperparams;
use nextok_core::samples::{generate_samples, read_samples, write_samples, PadSide, SampleSet};

use crate::error::CliError;

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn preprocess(input_dir: &Path, output: &Path, ext: &str) -> Result<(), CliError> {
    let want = ext.trim_start_matches('.');
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(input_dir) {
        let entry = entry.map_err(|e| CliError::Runtime(format!("{}: {e}", input_dir.display())))?;
        if entry.file_type().is_file()
            && entry.path().extension().is_some_and(|x| x == want)
        {
            files.push(entry.into_path());
        }
    }
    // The walk order is filesystem-dependent; a full path sort makes the
    // corpus line order canonical.
    files.sort();
    let corpus = build_corpus(&files, output)?;
    println!(
        "corpus {}: {} files, {} lines, {} skipped",
        output.display(),
        files.len(),
        corpus.line_count,
        corpus.skipped
    );
    Ok(())
}

pub fn split(
    input: &Path,
    train_frac: f64,
    seed: u64,
    out_train: &Path,
    out_eval: &Path,
) -> Result<(), CliError> {
    let lines = read_corpus_lines(input)?;
    let corpus = CorpusFile {
        path: input.to_path_buf(),
        line_count: lines.len(),
        skipped: 0,
    };
    let (train, eval) = split_corpus(&corpus, train_frac, seed, out_train, out_eval)?;
    println!("train {}: {} lines", train.path.display(), train.line_count);
    println!("eval {}: {} lines", eval.path.display(), eval.line_count);
    Ok(())
}

pub fn train_bpe(corpus: &Path, vocab_size: usize, output: &Path) -> Result<(), CliError> {
    let lines = read_corpus_lines(corpus)?;
    let model = train_bpe_from_lines(lines.iter().map(String::as_str), vocab_size)?;
    model.save(output)?;
    println!(
        "model {}: vocab {}, {} merges",
        output.display(),
        model.vocab_size(),
        model.merge_count()
    );
    Ok(())
}

pub fn encode(model: &Path, input: &Path, output: &Path) -> Result<(), CliError> {
    let bpe = BpeModel::load(model)?;
    let lines = read_corpus_lines(input)?;
    let file = fs::File::create(output).map_err(write_err(output))?;
    let mut w = BufWriter::new(file);
    let mut tokens = 0usize;
    for line in &lines {
        let ids = bpe.encode(line);
        tokens += ids.len();
        let mut first = true;
        for id in ids.as_slice() {
            if !first {
                write!(w, " ").map_err(write_err(output))?;
            }
            write!(w, "{id}").map_err(write_err(output))?;
            first = false;
        }
        writeln!(w).map_err(write_err(output))?;
    }
    w.flush().map_err(write_err(output))?;
    println!(
        "ids {}: {} lines, {} tokens",
        output.display(),
        lines.len(),
        tokens
    );
    Ok(())
}

pub fn decode(model: &Path, input: &Path, output: &Path) -> Result<(), CliError> {
    let bpe = BpeModel::load(model)?;
    let id_lines = read_id_lines(input)?;
    let file = fs::File::create(output).map_err(write_err(output))?;
    let mut w = BufWriter::new(file);
    for ids in &id_lines {
        let text = bpe.decode(ids)?;
        writeln!(w, "{text}").map_err(write_err(output))?;
    }
    w.flush().map_err(write_err(output))?;
    println!("text {}: {} lines", output.display(), id_lines.len());
    Ok(())
}

pub fn gen_samples(
    ids: &Path,
    window: usize,
    step: usize,
    pad_side: &str,
    output: &Path,
) -> Result<(), CliError> {
    let pad = match pad_side {
        "right" => PadSide::Right,
        "left" => PadSide::Left,
        other => {
            return Err(CliError::Usage(format!(
                "--pad-side must be `right` or `left`, got `{other}`"
            )))
        }
    };
    let id_lines = read_id_lines(ids)?;
    let mut set = SampleSet::new(window, step);
    for doc in &id_lines {
        let samples = generate_samples(&TokenSequence(doc.clone()), window, step, pad)?;
        set.samples.extend(samples);
    }
    write_samples(&set, output)?;
    println!(
        "samples {}: {} windows from {} documents",
        output.display(),
        set.len(),
        id_lines.len()
    );
    Ok(())
}

pub fn train(
    kind: &str,
    samples: &Path,
    bpe: &Path,
    out: &Path,
    hp: &Hyperparams,
) -> Result<(), CliError> {
    let kind = parse_kind(kind)?;
    let set = read_samples(samples)?;
    let model = BpeModel::load(bpe)?;
    let ckpt = nextok_core::harness::train(kind, &set, model.vocab_size(), hp, out)?;
    println!(
        "trained {} on {} samples: epoch {}, step {}",
        ckpt.kind.as_str(),
        set.len(),
        ckpt.epoch,
        ckpt.step
    );
    println!("checkpoint {}", out.join("checkpoint.txt").display());
    println!("metrics {}", out.join("metrics.csv").display());
    Ok(())
}

pub fn eval(ckpt: &Path, samples: &Path) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(ckpt)?;
    let set = read_samples(samples)?;
    let row = evaluate(&ckpt, &set)?;
    println!("samples {}", set.len());
    println!("loss {}", row.loss);
    println!("top1 {}", row.top1);
    println!("top5 {}", row.top5);
    println!("perplexity {}", row.perplexity);
    Ok(())
}

pub fn oov(bpe: &Path, corpus: &Path, truncations: &str) -> Result<(), CliError> {
    let model = BpeModel::load(bpe)?;
    let lines = read_corpus_lines(corpus)?;
    let sizes = parse_truncations(truncations)?;
    let rows = oov_experiment(&model, &lines, &sizes)?;
    print!("{}", oov_table(&rows));
    Ok(())
}

pub fn complete(ckpt: &Path, bpe: &Path, topk: usize) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(ckpt)?;
    let model = BpeModel::load(bpe)?;
    let lm = ckpt.to_model();
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    complete_repl(&lm, &model, ckpt.window, topk, stdin, stdout)?;
    Ok(())
}

fn parse_kind(kind: &str) -> Result<ModelKind, CliError> {
    ModelKind::parse(kind).ok_or_else(|| {
        CliError::Usage(format!("--kind must be `attn` or `pointer`, got `{kind}`"))
    })
}

fn parse_truncations(spec: &str) -> Result<Vec<usize>, CliError> {
    let mut sizes = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let size: usize = part
            .parse()
            .map_err(|e| CliError::Usage(format!("--truncations entry `{part}`: {e}")))?;
        sizes.push(size);
    }
    if sizes.is_empty() {
        return Err(CliError::Usage(
            "--truncations needs at least one size".into(),
        ));
    }
    Ok(sizes)
}

/// Parse an ids file: one document per line, space-separated decimal ids.
/// Blank lines are empty documents and stay empty.
fn read_id_lines(path: &Path) -> Result<Vec<Vec<u32>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let mut ids = Vec::new();
        for tok in line.split(' ').filter(|t| !t.is_empty()) {
            let id: u32 = tok.parse().map_err(|_| {
                CliError::Data(format!(
                    "{}:{}: `{tok}` is not a token id",
                    path.display(),
                    idx + 1
                ))
            })?;
            ids.push(id);
        }
        out.push(ids);
    }
    Ok(out)
}
