use std::path::{Path, PathBuf};

use llaca::llm::{ClientConfig, FilterScope};
use llaca::vocab::DEFAULT_TOP_RATIO;
use llaca::{Decoder, Error, PreprocessRules};
use serde::Deserialize;

use crate::Overrides;

/// Contents of a `--config` TOML file. Relative paths resolve against the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    raw: Option<PathBuf>,
    gold: Option<PathBuf>,
    vocab: Option<PathBuf>,
    input: Vec<PathBuf>,
    output: Option<PathBuf>,
    fixture: Option<PathBuf>,
    record: Option<PathBuf>,
    audit: Option<PathBuf>,
    mismatches: Option<PathBuf>,
    decoder: Option<String>,
    top_ratio: Option<f64>,
    iterations: Option<usize>,
    seed: Option<u64>,
    filter_scope: Option<FilterScope>,
    latin: Option<bool>,
    client: Option<ClientConfig>,
}

/// Settings after merging the config file with command-line flags.
#[derive(Debug)]
pub struct RunConfig {
    pub raw: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub input: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub fixture: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub audit: Option<PathBuf>,
    pub mismatches: Option<PathBuf>,
    pub decoder: Decoder,
    pub top_ratio: f64,
    pub iterations: usize,
    pub scope: FilterScope,
    pub rules: PreprocessRules,
    pub client: ClientConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, flags: &Overrides) -> llaca::Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                let mut file: FileConfig = toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                file.resolve(p.parent().unwrap_or(Path::new("")));
                file
            }
            None => FileConfig::default(),
        };
        let pick = |flag: &Option<PathBuf>, file: Option<PathBuf>| flag.clone().or(file);

        let mut client = file.client.unwrap_or_default().with_env_api_key();
        if let Some(seed) = flags.seed.or(file.seed) {
            client.seed = seed;
        }
        client.validate()?;

        let decoder = match flags.decoder.as_deref().or(file.decoder.as_deref()) {
            Some(name) => name.parse()?,
            None => Decoder::Llaca,
        };
        let top_ratio = flags
            .top_ratio
            .or(file.top_ratio)
            .unwrap_or(DEFAULT_TOP_RATIO);
        if !(top_ratio > 0.0 && top_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "top ratio must lie in (0, 1], got {top_ratio}"
            )));
        }
        let iterations = flags.iterations.or(file.iterations).unwrap_or(1);
        if iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        let latin = flags.latin || file.latin.unwrap_or(false);

        Ok(RunConfig {
            raw: pick(&flags.raw, file.raw),
            gold: pick(&flags.gold, file.gold),
            vocab: pick(&flags.vocab, file.vocab),
            input: if flags.input.is_empty() {
                file.input
            } else {
                flags.input.clone()
            },
            output: pick(&flags.output, file.output),
            fixture: pick(&flags.fixture, file.fixture),
            record: pick(&flags.record, file.record),
            audit: pick(&flags.audit, file.audit),
            mismatches: pick(&flags.mismatches, file.mismatches),
            decoder,
            top_ratio,
            iterations,
            scope: flags.filter_scope.or(file.filter_scope).unwrap_or_default(),
            rules: PreprocessRules {
                latin,
                ..PreprocessRules::default()
            },
            client,
        })
    }

    /// The path or a usage error naming the flag that supplies it.
    pub fn need<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> llaca::Result<&'a Path> {
        path.as_deref().ok_or_else(|| {
            Error::Config(format!("missing --{flag} (or `{flag}` in the config file)"))
        })
    }
}

impl FileConfig {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                *path = base.join(&*path);
            }
        };
        for p in [
            &mut self.raw,
            &mut self.gold,
            &mut self.vocab,
            &mut self.output,
            &mut self.fixture,
            &mut self.record,
            &mut self.audit,
            &mut self.mismatches,
        ] {
            join(p);
        }
        for p in &mut self.input {
            *p = base.join(&*p);
        }
    }
}
