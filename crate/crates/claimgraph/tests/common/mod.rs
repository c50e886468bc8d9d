//! Fixtures shared by the integration tests: the two worked scenarios with
//! replaying scorers, and a small synthetic corpus for end-to-end runs.
#![allow(dead_code)]

use std::collections::BTreeMap;

use claimgraph::engine::Engine;
use claimgraph_core::scoring::ScoringError;
use claimgraph_core::{
    annotate_store, ArticleRecord, CosineSts, Gazetteer, GraphStore, LinkerConfig, NliProvider,
    NliVerdict, PipelineLimits, ReferenceEmbedder, ReferenceNli, StsScore, StsScorer,
};

pub const CLAIM_1A: &str =
    "Denmark and Austria believe that the European Union should increase aid to refugees.";
pub const CLAIM_1B: &str =
    "Denmark disagrees with Austria on the management of immigration issues in the European Union.";
pub const EVIDENCE_1A: &str = "Austria and Denmark also want to increase EU support for countries hosting refugees near crisis hotspots so that they do not travel to Europe.";
pub const EVIDENCE_1B: &str = "Checked by police at the Airport Police Departments, the foreigners presented forged travel documents in order to leave the country for other EU countries like France, Germany, Italy, Austria, the Netherlands, Denmark, Spain and Norway.";

pub const CLAIM_2: &str = "The United States plans to impose sanctions on Iran.";
pub const EVIDENCE_2A: &str = "Iran faces dilemma over whether to comply of Washington or will lead to collapse. The sanctions that came back in force today, will force the government of the Islamic Republic to accept the US claims regarding the Iranian nuclear program and Iranian activities in the Middle East because, otherwise, the regime will be in danger to collapse, claimed Israel Kats, the Israeli minister responsible for Information Services.";
pub const EVIDENCE_2B: &str = "Why Greece was exempted from US sanctions on Iran. New US sanctions on oil exports from Iran have been in force since November 5.";
pub const EVIDENCE_2C: &str = "The US is pushing again sanctions on Iran and withdraw from the nuclear deal of 2015 and then they want to have conversations with us, Rohani said in a speech that was broadcast live on television.";
pub const EVIDENCE_2_NEW: &str = "Following the collapse of the last talks between the US and Iran, the announcement of additional sanctions is expected in the coming days.";

pub const SCENARIO_GAZETTEER: &str = "\
Denmark\tQ35\tDenmark\tcountry
Austria\tQ40\tAustria\tcountry
European Union\tQ458\tEuropean Union
EU\tQ458\tEuropean Union
United States\tQ30\tUnited States\tcountry
US\tQ30\tUnited States\tcountry
Iran\tQ794\tIran\tcountry
";

pub fn verdict(c: f64, e: f64, n: f64) -> NliVerdict {
    NliVerdict {
        contradiction: c,
        entailment: e,
        neutral: n,
    }
}

/// Replays fixed similarity scores keyed by candidate text. Unknown
/// candidates score 0.
pub struct ReplaySts(pub BTreeMap<String, f64>);

impl StsScorer for ReplaySts {
    fn similarities(
        &self,
        _claim: &str,
        candidates: &[&str],
    ) -> Result<Vec<StsScore>, ScoringError> {
        Ok(candidates
            .iter()
            .map(|c| StsScore(self.0.get(*c).copied().unwrap_or(0.0)))
            .collect())
    }
}

/// Replays fixed verdicts keyed by (premise, hypothesis).
pub struct ReplayNli(pub BTreeMap<(String, String), NliVerdict>);

impl NliProvider for ReplayNli {
    fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError> {
        pairs
            .iter()
            .map(|(p, h)| {
                self.0
                    .get(&(p.to_string(), h.to_string()))
                    .copied()
                    .ok_or_else(|| {
                        ScoringError::MalformedResponse(format!("no replay for premise {p:?}"))
                    })
            })
            .collect()
    }
}

pub fn replay_sts() -> ReplaySts {
    ReplaySts(
        [
            (EVIDENCE_1A, 0.8505),
            (EVIDENCE_1B, 0.2283),
            (EVIDENCE_2A, 0.6665),
            (EVIDENCE_2B, 0.6324),
            (EVIDENCE_2C, 0.5151),
            (EVIDENCE_2_NEW, 0.7195),
        ]
        .into_iter()
        .map(|(t, s)| (t.to_string(), s))
        .collect(),
    )
}

pub fn replay_nli() -> ReplayNli {
    let key = |p: &str, h: &str| (p.to_string(), h.to_string());
    ReplayNli(
        [
            (key(EVIDENCE_1A, CLAIM_1A), verdict(0.014, 0.958, 0.028)),
            (key(EVIDENCE_1A, CLAIM_1B), verdict(0.951, 0.002, 0.047)),
            (key(EVIDENCE_2A, CLAIM_2), verdict(0.170, 0.571, 0.259)),
            (key(EVIDENCE_2_NEW, CLAIM_2), verdict(0.012, 0.891, 0.097)),
        ]
        .into_iter()
        .collect(),
    )
}

pub fn scenario_gazetteer() -> Gazetteer {
    Gazetteer::from_tsv(SCENARIO_GAZETTEER).unwrap()
}

pub fn scenario_limits() -> PipelineLimits {
    PipelineLimits {
        prefer_covering_sections: true,
        ..PipelineLimits::default()
    }
}

pub fn scenario_engine() -> Engine {
    Engine::from_parts(
        Box::new(scenario_gazetteer()),
        LinkerConfig::default(),
        Box::new(replay_sts()),
        Box::new(replay_nli()),
        scenario_limits(),
    )
}

/// Adds one single-section article per text and links entities.
pub fn add_sections(store: &mut GraphStore, texts: &[(&str, &str)]) {
    for (url, text) in texts {
        store
            .upsert_article(ArticleRecord::new(*url, "", *text), vec![text.to_string()])
            .unwrap();
    }
    annotate_store(store, &scenario_gazetteer(), &LinkerConfig::default()).unwrap();
}

/// The store before the new Scenario-2 section arrives.
pub fn scenario_store() -> GraphStore {
    let mut g = GraphStore::new();
    add_sections(
        &mut g,
        &[
            ("https://example.org/s1/a", EVIDENCE_1A),
            ("https://example.org/s1/b", EVIDENCE_1B),
            ("https://example.org/s2/a", EVIDENCE_2A),
            ("https://example.org/s2/b", EVIDENCE_2B),
            ("https://example.org/s2/c", EVIDENCE_2C),
        ],
    );
    g
}

pub const NEW_URL: &str = "https://example.org/s2/new";

/// Ingestion-format line carrying the new Scenario-2 section.
pub fn new_article_line() -> String {
    serde_json::to_string(&ArticleRecord::new(NEW_URL, "", EVIDENCE_2_NEW)).unwrap()
}

// Synthetic corpus for end-to-end runs with the reference scorers.

pub const CORPUS_GAZETTEER: &str = "\
Greece\tQ41\tGreece
Italy\tQ38\tItaly
Spain\tQ29\tSpain
Portugal\tQ45\tPortugal
France\tQ142\tFrance
Germany\tQ183\tGermany
Norway\tQ20\tNorway
Sweden\tQ34\tSweden
Finland\tQ33\tFinland
Poland\tQ36\tPoland
Austria\tQ40\tAustria
Belgium\tQ31\tBelgium
Ireland\tQ27\tIreland
Denmark\tQ35\tDenmark
Netherlands\tQ55\tNetherlands
Atlantis\tQ43317\tAtlantis
";

pub const CORPUS_BODIES: [&str; 20] = [
    "Greece signed the energy agreement with Italy in Athens.",
    "France opened a rail tunnel to Germany near Strasbourg.",
    "Finland hosted the summit with Poland in Helsinki.",
    "Spain joined the fishing treaty with Portugal last spring.",
    "Austria approved the trade deal with Belgium.",
    "Ireland sold wind turbines to Denmark this year.",
    "Norway exports salmon to Sweden.",
    "Italy and Greece met in the football final.",
    "Germany and France debated farm subsidies.",
    "Poland praised Finland for its schools.",
    "Portugal beat Spain at handball.",
    "The Netherlands built new dikes along the coast.",
    "Belgium and Austria share a chocolate festival.",
    "Denmark and Ireland discussed dairy exports.",
    "Sweden and Norway share a long border.",
    "Markets rallied after the central bank decision.",
    "A storm closed several ports overnight.",
    "The Netherlands and Germany expanded a canal.",
    "Greece welcomed record tourism numbers.",
    "Scientists reported a rare comet sighting.",
];

/// Three claims per label, built so the reference scorers decide them.
pub const CORPUS_DATASET: &str = r#"{"claim":"Greece signed the energy agreement with Italy","gold":"SUPPORTS"}
{"claim":"France opened a rail tunnel to Germany","gold":"SUPPORTS"}
{"claim":"Finland hosted the summit with Poland","gold":"SUPPORTS"}
{"claim":"Spain never joined the fishing treaty with Portugal","gold":"REFUTES"}
{"claim":"Austria approved no trade deal with Belgium","gold":"REFUTES"}
{"claim":"Ireland never sold wind turbines to Denmark","gold":"REFUTES"}
{"claim":"The weather was pleasant yesterday","gold":"NOT ENOUGH INFO"}
{"claim":"Atlantis rose from the sea","gold":"NOT ENOUGH INFO"}
{"claim":"Norway exports salmon to Sweden every winter by train","gold":"NOT ENOUGH INFO"}
"#;

pub fn corpus_jsonl() -> String {
    CORPUS_BODIES
        .iter()
        .enumerate()
        .map(|(i, body)| {
            let rec = ArticleRecord::new(format!("https://news.example.org/{i:02}"), "", *body);
            serde_json::to_string(&rec).unwrap() + "\n"
        })
        .collect()
}

pub fn corpus_engine() -> Engine {
    Engine::from_parts(
        Box::new(Gazetteer::from_tsv(CORPUS_GAZETTEER).unwrap()),
        LinkerConfig::default(),
        Box::new(CosineSts(ReferenceEmbedder::default())),
        Box::new(ReferenceNli),
        PipelineLimits::default(),
    )
}

/// Runs the service on an ephemeral port in a background runtime and
/// returns its base URL.
pub fn spawn_service(state: std::sync::Arc<claimgraph::service::AppState>) -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            claimgraph::service::serve(listener, state, std::future::pending())
                .await
                .unwrap();
        });
    });
    format!("http://{addr}")
}

/// Issues a request and returns the status and parsed JSON body.
pub fn call(method: &str, url: &str, body: Option<&str>) -> (u16, serde_json::Value) {
    let agent = claimgraph::http::agent(std::time::Duration::from_secs(30));
    let mut resp = match (method, body) {
        ("GET", _) => agent.get(url).call(),
        (_, Some(b)) => agent.post(url).content_type("application/json").send(b),
        (_, None) => agent.post(url).send_empty(),
    }
    .unwrap();
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().unwrap();
    (
        status,
        serde_json::from_str(&text).unwrap_or(serde_json::Value::Null),
    )
}
