use serde_json::{Map, Value};
use solvdyn::presets::{self, Preset};
use solvdyn::Error;

use crate::commands::keys;
use crate::{Command, Flags, SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

fn parse_value(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn parse_grid(s: &str) -> Result<Value, CliError> {
    if let Ok(v @ Value::Object(_)) = serde_json::from_str(s) {
        return Ok(v);
    }
    let parts: Vec<&str> = s.split(['x', ',']).collect();
    match parts.as_slice() {
        [a, b] => {
            let nv: usize = a.trim().parse().map_err(|_| CliError::Usage(format!("bad grid {s:?}")))?;
            let nt: usize = b.trim().parse().map_err(|_| CliError::Usage(format!("bad grid {s:?}")))?;
            Ok(serde_json::json!({"nv": nv, "nt": nt}))
        }
        _ => Err(CliError::Usage(format!("grid must look like 32x8, got {s:?}"))),
    }
}

fn matrix_from_flag(s: &str) -> Result<Value, CliError> {
    match Preset::parse(s) {
        Ok(p) => p
            .paired_matrix()
            .map(|m| to_value(&m))
            .ok_or_else(|| CliError::Usage(format!("preset {s} has no torus matrix"))),
        Err(_) => Ok(parse_value(s)),
    }
}

/// Config key that the 2×2 or 3×3 matrix flag --A feeds for a command.
fn matrix_key(cmd: Command) -> &'static str {
    match cmd {
        Command::CertLinear => "M",
        Command::Lefschetz => "L",
        _ => "A",
    }
}

fn apply_preset(cmd: Command, name: &str, cfg: &mut Map<String, Value>) -> Result<(), CliError> {
    let p = Preset::parse(name)?;
    let allowed = keys(cmd);
    let mut set = |k: &str, v: Value| -> Result<(), CliError> {
        if !allowed.iter().any(|x| x == k) {
            return Err(CliError::Usage(format!("preset {name} does not apply to {}", cmd.name())));
        }
        cfg.insert(k.to_string(), v);
        Ok(())
    };
    match p {
        Preset::Cat => set("A", to_value(&presets::cat())),
        Preset::PaperMatrix(i) => {
            let key = if cmd == Command::QuotientClassify { "f_star" } else { matrix_key(cmd) };
            set(key, to_value(&presets::paper_matrix(i)))
        }
        Preset::Tau(i) => {
            set("generators", to_value(&vec![presets::tau(i)]))?;
            set("f_star", to_value(&presets::paper_matrix(i)))
        }
        Preset::HeisExample => {
            if cmd == Command::Heis {
                Ok(())
            } else {
                Err(CliError::Usage(format!("preset {name} only applies to heis")))
            }
        }
    }
}

fn read_config_file(cmd: Command, path: &std::path::Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let Value::Object(mut obj) = v else {
        return Err(Error::Parse("config must be a JSON object".into()).into());
    };
    if obj.contains_key("schema") {
        if obj.get("schema") != Some(&Value::String(SCHEMA.into())) {
            return Err(Error::Parse(format!("unsupported schema {:?}", obj["schema"])).into());
        }
        if let Some(c) = obj.get("command") {
            if c != cmd.name() {
                return Err(Error::InvalidParameter(format!("config was written by {c}, not {}", cmd.name())).into());
            }
        }
        return match obj.remove("config") {
            Some(Value::Object(c)) => Ok(c),
            _ => Err(Error::Parse("output document has no config object".into()).into()),
        };
    }
    Ok(obj)
}

/// Config object for `cmd`: file values, then preset, then flags.
pub fn merge_config(cmd: Command, flags: &Flags) -> Result<Map<String, Value>, CliError> {
    let mut cfg = match &flags.config {
        Some(p) => read_config_file(cmd, p)?,
        None => Map::new(),
    };
    if let Some(p) = &flags.preset {
        apply_preset(cmd, p, &mut cfg)?;
    }
    let allowed = keys(cmd);
    let plain: [(&str, &Option<String>, &str); 25] = [
        ("A", &flags.a, matrix_key(cmd)),
        ("B", &flags.b, "B"),
        ("v", &flags.v, "v"),
        ("e", &flags.e, "e"),
        ("k", &flags.k, "k"),
        ("eps", &flags.eps, "eps"),
        ("tol", &flags.tol, "tol"),
        ("seed", &flags.seed, "seed"),
        ("maxiter", &flags.maxiter, "maxiter"),
        ("T", &flags.window, "T"),
        ("generators", &flags.generators, "generators"),
        ("flips", &flags.flips, "flips"),
        ("gamma2-log", &flags.gamma2_log, "gamma2_log"),
        ("opening", &flags.opening, "opening"),
        ("N", &flags.iterate, "N"),
        ("steps", &flags.steps, "steps"),
        ("kind", &flags.kind, "kind"),
        ("point", &flags.point, "point"),
        ("length", &flags.length, "length"),
        ("n", &flags.n, "n"),
        ("n-terms", &flags.n_terms, "n_terms"),
        ("samples", &flags.samples, "samples"),
        ("n-max", &flags.n_max, "n_max"),
        ("half-width", &flags.half_width, "half_width"),
        ("points", &flags.points, "points"),
    ];
    let extra: [(&str, &Option<String>, &str); 3] = [
        ("pushes", &flags.pushes, "pushes"),
        ("expansivity-eps", &flags.expansivity_eps, "expansivity_eps"),
        ("expansivity-steps", &flags.expansivity_steps, "expansivity_steps"),
    ];
    for (flag, val, key) in plain.iter().chain(extra.iter()) {
        if let Some(s) = val {
            if !allowed.iter().any(|x| x == key) {
                return Err(CliError::Usage(format!("--{flag} does not apply to {}", cmd.name())));
            }
            cfg.insert(key.to_string(), parse_value(s));
        }
    }
    if let Some(g) = &flags.grid {
        if !allowed.iter().any(|x| x == "grid") {
            return Err(CliError::Usage(format!("--grid does not apply to {}", cmd.name())));
        }
        cfg.insert("grid".into(), parse_grid(g)?);
    }
    if let Some(f) = &flags.fstar {
        if !allowed.iter().any(|x| x == "f_star") {
            return Err(CliError::Usage(format!("--fstar does not apply to {}", cmd.name())));
        }
        cfg.insert("f_star".into(), matrix_from_flag(f)?);
    }
    Ok(cfg)
}
