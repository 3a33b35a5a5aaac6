//! Name-keyed catalogs of interchangeable strategies.
//!
//! Every family of runtime-selectable components (velocity fields, initial
//! data, samplers, experiment kinds) is a [`Catalog`] of constructors. A config
//! entry such as `{ kind = "linear_strain", lambda = 1.0 }` deserializes into
//! a [`CatalogSpec`] and is turned into a trait object by [`Catalog::build`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Raw numeric parameters of a catalog entry.
pub type Params = BTreeMap<String, f64>;

/// A catalog selection: entry name plus its numeric parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: Params,
}

impl CatalogSpec {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            params: Params::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

impl fmt::Display for CatalogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamDoc {
    pub name: &'static str,
    pub default: Option<f64>,
    pub doc: &'static str,
}

impl ParamDoc {
    pub const fn required(name: &'static str, doc: &'static str) -> Self {
        Self {
            name,
            default: None,
            doc,
        }
    }

    pub const fn optional(name: &'static str, default: f64, doc: &'static str) -> Self {
        Self {
            name,
            default: Some(default),
            doc,
        }
    }
}

/// Parameters after defaults were filled in and unknown names rejected.
#[derive(Clone, Debug)]
pub struct ResolvedParams(Params);

impl ResolvedParams {
    /// Value of a declared parameter.
    ///
    /// Only names declared in the entry's [`ParamDoc`] list are present;
    /// asking for anything else is a bug in the constructor.
    pub fn get(&self, name: &str) -> f64 {
        *self
            .0
            .get(name)
            .unwrap_or_else(|| panic!("parameter `{name}` was not declared"))
    }

    pub fn usize(&self, name: &str) -> Result<usize> {
        let v = self.get(name);
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(Error::param(name, format!("expected a non-negative integer, got {v}")))
        }
    }
}

type Builder<T> = Box<dyn Fn(&ResolvedParams) -> Result<T> + Send + Sync>;

struct Entry<T> {
    summary: &'static str,
    params: Vec<ParamDoc>,
    build: Builder<T>,
}

/// Listing of one catalog entry, as printed by `list-scenarios`.
#[derive(Clone, Debug, Serialize)]
pub struct EntryInfo {
    pub name: String,
    pub summary: &'static str,
    pub params: Vec<ParamDoc>,
}

pub struct Catalog<T> {
    what: &'static str,
    entries: BTreeMap<String, Entry<T>>,
}

impl<T> Catalog<T> {
    pub fn new(what: &'static str) -> Self {
        Self {
            what,
            entries: BTreeMap::new(),
        }
    }

    pub fn register<F>(
        &mut self,
        name: &str,
        summary: &'static str,
        params: Vec<ParamDoc>,
        build: F,
    ) -> Result<()>
    where
        F: Fn(&ResolvedParams) -> Result<T> + Send + Sync + 'static,
    {
        if self.entries.contains_key(name) {
            return Err(Error::Config(format!(
                "{} `{name}` registered twice",
                self.what
            )));
        }
        self.entries.insert(
            name.to_string(),
            Entry {
                summary,
                params,
                build: Box::new(build),
            },
        );
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn describe(&self) -> Vec<EntryInfo> {
        self.entries
            .iter()
            .map(|(name, e)| EntryInfo {
                name: name.clone(),
                summary: e.summary,
                params: e.params.clone(),
            })
            .collect()
    }

    /// Checks names and parameters without constructing anything.
    pub fn resolve(&self, spec: &CatalogSpec) -> Result<ResolvedParams> {
        let entry = self.entry(&spec.kind)?;
        for key in spec.params.keys() {
            if !entry.params.iter().any(|p| p.name == key) {
                return Err(Error::param(
                    format!("{}.{key}", spec.kind),
                    format!(
                        "unknown parameter for {} `{}` (accepted: {})",
                        self.what,
                        spec.kind,
                        entry
                            .params
                            .iter()
                            .map(|p| p.name)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                ));
            }
        }
        let mut resolved = Params::new();
        for p in &entry.params {
            let value = match (spec.params.get(p.name), p.default) {
                (Some(v), _) => *v,
                (None, Some(d)) => d,
                (None, None) => {
                    return Err(Error::param(
                        format!("{}.{}", spec.kind, p.name),
                        "missing required parameter",
                    ))
                }
            };
            if !value.is_finite() {
                return Err(Error::param(p.name, "must be finite"));
            }
            resolved.insert(p.name.to_string(), value);
        }
        Ok(ResolvedParams(resolved))
    }

    pub fn build(&self, spec: &CatalogSpec) -> Result<T> {
        let params = self.resolve(spec)?;
        (self.entry(&spec.kind)?.build)(&params)
    }

    fn entry(&self, name: &str) -> Result<&Entry<T>> {
        self.entries.get(name).ok_or_else(|| Error::UnknownName {
            what: self.what,
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Catalog<f64> {
        let mut c = Catalog::new("thing");
        c.register(
            "scaled",
            "returns a * b",
            vec![
                ParamDoc::required("a", "factor"),
                ParamDoc::optional("b", 2.0, "second factor"),
            ],
            |p| Ok(p.get("a") * p.get("b")),
        )
        .unwrap();
        c
    }

    #[test]
    fn defaults_fill_in() {
        let c = catalog();
        assert_eq!(c.build(&CatalogSpec::new("scaled").with("a", 3.0)).unwrap(), 6.0);
        assert_eq!(
            c.build(&CatalogSpec::new("scaled").with("a", 3.0).with("b", 1.0))
                .unwrap(),
            3.0
        );
    }

    #[test]
    fn rejects_unknown_and_missing() {
        let c = catalog();
        assert!(matches!(
            c.build(&CatalogSpec::new("nope")),
            Err(Error::UnknownName { .. })
        ));
        assert!(c.build(&CatalogSpec::new("scaled")).is_err());
        assert!(c
            .build(&CatalogSpec::new("scaled").with("a", 1.0).with("zzz", 1.0))
            .is_err());
    }

    #[test]
    fn duplicate_registration_fails() {
        let mut c = catalog();
        assert!(c.register("scaled", "", vec![], |_| Ok(0.0)).is_err());
    }

    #[test]
    fn spec_parses_from_inline_toml() {
        #[derive(Deserialize)]
        struct Wrap {
            velocity: CatalogSpec,
        }
        let w: Wrap = toml::from_str("velocity = { kind = \"linear_strain\", lambda = 1 }").unwrap();
        assert_eq!(w.velocity.kind, "linear_strain");
        assert_eq!(w.velocity.params["lambda"], 1.0);
    }
}
