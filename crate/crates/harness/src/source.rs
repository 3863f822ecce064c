//! Scenario sources: canned fixtures and a remote vision-language model.

use std::time::Duration;

use serde_json::json;
use tabletop_core::instantiation::{render_prompt, ScenarioSource};
use tabletop_core::{Error, TaskTemplate};

use crate::data::Store;

/// Reads `fixtures/<key>/<seed>.scenario.json`.
#[derive(Debug, Clone)]
pub struct FixtureSource {
    pub store: Store,
    pub key: String,
}

impl ScenarioSource for FixtureSource {
    fn fetch(&self, _template: &TaskTemplate, _n: usize, seed: u64) -> tabletop_core::Result<String> {
        self.store.fixture(&self.key, seed).map_err(|f| Error::Source(f.message))
    }
}

/// POSTs `{prompt, n}` to `VLM_ENDPOINT` and returns the response body.
/// The agent is shared, so one source can serve concurrent jobs.
#[derive(Debug, Clone)]
pub struct VlmSource {
    agent: ureq::Agent,
    endpoint: String,
    token: Option<String>,
}

impl VlmSource {
    pub fn new(endpoint: &str, token: Option<String>) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(300)).build();
        Self { agent, endpoint: endpoint.into(), token }
    }

    pub fn from_env() -> tabletop_core::Result<Self> {
        let endpoint = std::env::var("VLM_ENDPOINT").map_err(|_| Error::Source("VLM_ENDPOINT is not set".into()))?;
        Ok(Self::new(&endpoint, std::env::var("VLM_TOKEN").ok()))
    }
}

impl ScenarioSource for VlmSource {
    fn fetch(&self, template: &TaskTemplate, n: usize, _seed: u64) -> tabletop_core::Result<String> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(t) = &self.token {
            req = req.set("Authorization", &format!("Bearer {t}"));
        }
        let resp = req
            .send_json(json!({"prompt": render_prompt(template, n), "n": n}))
            .map_err(|e| Error::Source(e.to_string()))?;
        resp.into_string().map_err(|e| Error::Source(e.to_string()))
    }
}
