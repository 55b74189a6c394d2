//! Language -> model routing.
//!
//! Each language maps to one or more routes; a route either generates
//! directly in the target language or generates in English and translates.
//! Selection is seeded round-robin over a language's routes so repeated
//! generation spreads load across eligible models deterministically.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::lang::Lang;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteMode {
    Direct,
    EnThenTranslate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRoute {
    pub language: Lang,
    pub model_id: String,
    pub mode: RouteMode,
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translate_model_id: Option<String>,
}

impl ModelRoute {
    pub fn validate(&self) -> Result<()> {
        if self.model_id.is_empty() {
            return Err(Error::config(format!(
                "route for {} has an empty model_id",
                self.language
            )));
        }
        if self.endpoint.is_empty() {
            return Err(Error::config(format!(
                "route for {} has an empty endpoint",
                self.language
            )));
        }
        if self.mode == RouteMode::EnThenTranslate && self.translate_model_id.is_none() {
            return Err(Error::config(format!(
                "en_then_translate route for {} needs translate_model_id",
                self.language
            )));
        }
        Ok(())
    }
}

/// The per-language model assignment used in production: direct generation
/// where a model writes the language well, generate-in-English-then-translate
/// where only translation quality held up (Kannada; Tamil additionally).
pub fn reference_routes(endpoint: &str, translate_model: &str) -> Vec<ModelRoute> {
    let direct = |language: Lang, model_id: &str| ModelRoute {
        language,
        model_id: model_id.to_string(),
        mode: RouteMode::Direct,
        endpoint: endpoint.to_string(),
        translate_model_id: None,
    };
    let translate = |language: Lang, model_id: &str| ModelRoute {
        language,
        model_id: model_id.to_string(),
        mode: RouteMode::EnThenTranslate,
        endpoint: endpoint.to_string(),
        translate_model_id: Some(translate_model.to_string()),
    };
    vec![
        direct(Lang::Bengali, "gemma-3"),
        direct(Lang::Gujarati, "krutrim-2"),
        direct(Lang::Hindi, "gemma-3"),
        direct(Lang::Hindi, "krutrim-2"),
        translate(Lang::Kannada, "krutrim-2"),
        direct(Lang::Malayalam, "krutrim-2"),
        direct(Lang::Malayalam, "llama-3.3-70b"),
        direct(Lang::Marathi, "gemma-3"),
        direct(Lang::Marathi, "krutrim-2"),
        direct(Lang::Odia, "llama-3.3-70b"),
        direct(Lang::Punjabi, "gemma-3"),
        direct(Lang::Punjabi, "krutrim-2"),
        direct(Lang::Punjabi, "llama-3.3-70b"),
        direct(Lang::Tamil, "gemma-3"),
        direct(Lang::Tamil, "krutrim-2"),
        translate(Lang::Tamil, "gemma-3"),
        direct(Lang::Telugu, "gemma-3"),
        direct(Lang::Telugu, "krutrim-2"),
    ]
}

/// Load a routing table from JSON: `[{language, model_id, mode, endpoint,
/// translate_model_id?}, ...]`.
pub fn load_routes(path: &Path) -> Result<Vec<ModelRoute>> {
    let content = fs::read_to_string(path)?;
    let routes: Vec<ModelRoute> = serde_json::from_str(&content)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    for route in &routes {
        route.validate()?;
    }
    Ok(routes)
}

/// Seeded round-robin route selector.
#[derive(Debug, Clone)]
pub struct Router {
    routes: Vec<ModelRoute>,
    seed: u64,
    counters: HashMap<Lang, u64>,
}

impl Router {
    pub fn new(routes: Vec<ModelRoute>, seed: u64) -> Result<Router> {
        if routes.is_empty() {
            return Err(Error::config("routing table is empty"));
        }
        for route in &routes {
            route.validate()?;
        }
        Ok(Router {
            routes,
            seed,
            counters: HashMap::new(),
        })
    }

    pub fn routes_for(&self, lang: Lang) -> Vec<&ModelRoute> {
        self.routes.iter().filter(|r| r.language == lang).collect()
    }

    /// Next route for the language; errors when none is configured.
    pub fn route(&mut self, lang: Lang) -> Result<ModelRoute> {
        let eligible: Vec<usize> = self
            .routes
            .iter()
            .enumerate()
            .filter(|(_, r)| r.language == lang)
            .map(|(i, _)| i)
            .collect();
        if eligible.is_empty() {
            return Err(Error::config(format!("no route configured for language {lang}")));
        }
        let counter = self.counters.entry(lang).or_insert_with(|| {
            let mut h = Fnv1a::with_seed(self.seed);
            h.write(lang.tag().as_bytes());
            h.finish()
        });
        let idx = eligible[(*counter % eligible.len() as u64) as usize];
        *counter = counter.wrapping_add(1);
        Ok(self.routes[idx].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn router() -> Router {
        Router::new(reference_routes("http://localhost:8000/v1/chat/completions", "sarvam-translate"), 1).unwrap()
    }

    #[test]
    fn odia_routes_direct() {
        let mut r = router();
        let route = r.route(Lang::Odia).unwrap();
        assert_eq!(route.language, Lang::Odia);
        assert_eq!(route.mode, RouteMode::Direct);
        assert_eq!(route.model_id, "llama-3.3-70b");
    }

    #[test]
    fn kannada_routes_through_translation() {
        let mut r = router();
        let route = r.route(Lang::Kannada).unwrap();
        assert_eq!(route.mode, RouteMode::EnThenTranslate);
        assert_eq!(route.model_id, "krutrim-2");
        assert_eq!(route.translate_model_id.as_deref(), Some("sarvam-translate"));
    }

    #[test]
    fn unknown_language_is_config_error() {
        let mut r = router();
        assert!(matches!(r.route(Lang::English), Err(Error::Config(_))));
    }

    #[test]
    fn round_robin_cycles_languages_routes() {
        let mut r = router();
        let picks: Vec<String> = (0..4).map(|_| r.route(Lang::Hindi).unwrap().model_id).collect();
        assert_eq!(picks[0], picks[2]);
        assert_eq!(picks[1], picks[3]);
        assert_ne!(picks[0], picks[1]);
        // Route language always matches the query.
        for _ in 0..5 {
            assert_eq!(r.route(Lang::Tamil).unwrap().language, Lang::Tamil);
        }
    }

    #[test]
    fn selection_is_seed_deterministic() {
        let mut a = router();
        let mut b = router();
        for lang in [Lang::Hindi, Lang::Tamil, Lang::Punjabi, Lang::Hindi] {
            assert_eq!(a.route(lang).unwrap(), b.route(lang).unwrap());
        }
    }

    #[test]
    fn translate_route_without_model_rejected() {
        let bad = vec![ModelRoute {
            language: Lang::Kannada,
            model_id: "m".into(),
            mode: RouteMode::EnThenTranslate,
            endpoint: "http://x".into(),
            translate_model_id: None,
        }];
        assert!(matches!(Router::new(bad, 0), Err(Error::Config(_))));
    }
}
