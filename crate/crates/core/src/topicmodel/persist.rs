//! Plain-text model container.
//!
//! ```text
//! apptopic-lda 1
//! topics <K>
//! alpha <f64>
//! beta <f64>
//! iterations <n>
//! burn_in <n>
//! seed <u64>
//! samples <n>
//! vocab <V>
//! <token>                                  V lines, id order
//! docs <D>
//! <doc id>\t<K final counts>\t<K summed counts>         D lines
//! topic_words
//! <topic number>\t<w:c ...>\t<w:c ...>    K lines, sparse final / summed
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a saved model
//! reloads bit-identically. `phi` and `theta` are recomputed on load.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{LdaConfig, LdaModel, Matrix, Vocabulary};
use crate::dataset::write_atomic;
use crate::{Error, Result};

const MAGIC: &str = "apptopic-lda";
const VERSION: u32 = 1;

pub fn write_model<W: Write>(model: &LdaModel, mut w: W) -> std::io::Result<()> {
    let c = &model.config;
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "topics {}", c.n_topics)?;
    writeln!(w, "alpha {}", c.alpha)?;
    writeln!(w, "beta {}", c.beta)?;
    writeln!(w, "iterations {}", c.n_iterations)?;
    writeln!(w, "burn_in {}", c.burn_in)?;
    writeln!(w, "seed {}", c.seed)?;
    writeln!(w, "samples {}", model.n_samples)?;
    writeln!(w, "vocab {}", model.vocab.len())?;
    for t in model.vocab.tokens() {
        writeln!(w, "{t}")?;
    }
    writeln!(w, "docs {}", model.n_docs())?;
    let join = |row: &[u64]| row.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    for (d, id) in model.doc_ids.iter().enumerate() {
        writeln!(
            w,
            "{id}\t{}\t{}",
            join(model.doc_topic_counts.row(d)),
            join(model.summed_doc_topic.row(d))
        )?;
    }
    writeln!(w, "topic_words")?;
    let sparse = |row: &[u64]| {
        row.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, c)| format!("{i}:{c}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for k in 0..model.n_topics() {
        writeln!(
            w,
            "{}\t{}\t{}",
            k + 1,
            sparse(model.topic_word_counts.row(k)),
            sparse(model.summed_topic_word.row(k))
        )?;
    }
    writeln!(w, "end")?;
    Ok(())
}

pub fn save_model(model: &LdaModel, path: &Path) -> Result<()> {
    write_atomic(path, |w| write_model(model, w))
}

struct Lines<'p, R> {
    inner: std::io::Lines<BufReader<R>>,
    path: &'p Path,
    line: usize,
}

impl<R: Read> Lines<'_, R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io(self.path, e)),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, msg)
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.next()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} <value>`")))?;
        value
            .trim()
            .parse()
            .map_err(|_| self.err(format!("bad value for {key}: {value:?}")))
    }

    fn counts(&self, text: &str, n: usize) -> Result<Vec<u64>> {
        let row: Vec<u64> = text
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| self.err(format!("bad count {x:?}"))))
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(self.err(format!("expected {n} counts, got {}", row.len())));
        }
        Ok(row)
    }

    fn sparse(&self, text: &str, n: usize) -> Result<Vec<u64>> {
        let mut row = vec![0u64; n];
        for pair in text.split_whitespace() {
            let (i, c) = pair
                .split_once(':')
                .and_then(|(i, c)| Some((i.parse::<usize>().ok()?, c.parse::<u64>().ok()?)))
                .ok_or_else(|| self.err(format!("bad entry {pair:?}")))?;
            if i >= n {
                return Err(self.err(format!("word id {i} out of range")));
            }
            row[i] = c;
        }
        Ok(row)
    }
}

pub fn read_model<R: Read>(reader: R, path: &Path) -> Result<LdaModel> {
    let mut lines = Lines {
        inner: BufReader::new(reader).lines(),
        path,
        line: 0,
    };
    let header = lines.next()?;
    if header != format!("{MAGIC} {VERSION}") {
        return Err(lines.err(format!("not a version {VERSION} model file")));
    }
    let config = LdaConfig {
        n_topics: lines.field("topics")?,
        alpha: lines.field("alpha")?,
        beta: lines.field("beta")?,
        n_iterations: lines.field("iterations")?,
        burn_in: lines.field("burn_in")?,
        seed: lines.field("seed")?,
    };
    config.validate()?;
    let k = config.n_topics;
    let samples: u64 = lines.field("samples")?;
    let v: usize = lines.field("vocab")?;
    let mut tokens = Vec::with_capacity(v);
    for _ in 0..v {
        tokens.push(lines.next()?);
    }
    let vocab = Vocabulary::from_tokens(tokens.iter().cloned());
    if vocab.tokens() != tokens.as_slice() {
        return Err(lines.err("vocabulary must be sorted and duplicate-free"));
    }
    let d: usize = lines.field("docs")?;
    let mut ids = Vec::with_capacity(d);
    let mut final_rows = Vec::with_capacity(d);
    let mut summed_rows = Vec::with_capacity(d);
    for _ in 0..d {
        let line = lines.next()?;
        let mut parts = line.split('\t');
        let (Some(id), Some(fin), Some(sum), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(lines.err("expected `id<TAB>counts<TAB>summed counts`"));
        };
        ids.push(id.to_owned());
        final_rows.push(lines.counts(fin, k)?);
        summed_rows.push(lines.counts(sum, k)?);
    }
    if lines.next()? != "topic_words" {
        return Err(lines.err("expected `topic_words`"));
    }
    let mut tw_rows = Vec::with_capacity(k);
    let mut tw_summed = Vec::with_capacity(k);
    for topic in 1..=k {
        let line = lines.next()?;
        let mut parts = line.split('\t');
        let (Some(num), Some(fin), Some(sum), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(lines.err("expected `topic<TAB>counts<TAB>summed counts`"));
        };
        if num.parse::<usize>().ok() != Some(topic) {
            return Err(lines.err(format!("expected topic {topic}")));
        }
        tw_rows.push(lines.sparse(fin, v)?);
        tw_summed.push(lines.sparse(sum, v)?);
    }
    if lines.next()? != "end" {
        return Err(lines.err("expected `end`"));
    }
    LdaModel::from_counts(
        config,
        vocab,
        ids,
        Matrix::from_rows(tw_rows, v),
        Matrix::from_rows(final_rows, k),
        Matrix::from_rows(tw_summed, v),
        Matrix::from_rows(summed_rows, k),
        samples,
    )
}

pub fn load_model(path: &Path) -> Result<LdaModel> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(file, path)
}
