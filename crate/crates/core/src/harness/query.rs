use std::fmt;
use std::str::FromStr;

use crate::dataset::AnnotatedFrame;

use super::HarnessError;

/// One `key=value` or `key!=value` condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub key: String,
    pub value: String,
    pub negated: bool,
}

/// Conjunction of clauses joined by `&&`. The empty query (or `*`) selects
/// everything.
///
/// Keys: `frame_id`, `video_id`, `zone_id`, `label` (`+1`/`-1`), `kind`
/// (`localization`/`boundary`) and `tags.<field>` for `time_of_day`,
/// `precipitation`, `road`, `camera`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Query {
    pub clauses: Vec<Clause>,
}

const PLAIN_KEYS: [&str; 5] = ["frame_id", "video_id", "zone_id", "label", "kind"];
const TAG_KEYS: [&str; 4] = ["time_of_day", "precipitation", "road", "camera"];

fn field(frame: &AnnotatedFrame, key: &str) -> String {
    match key {
        "frame_id" => frame.frame_id.clone(),
        "video_id" => frame.video_id.clone(),
        "zone_id" => frame.zone_id.clone(),
        "label" => frame.label.to_string(),
        "kind" => frame.annotation_kind.as_str().to_string(),
        _ => {
            let tag = key.strip_prefix("tags.").expect("validated at parse time");
            frame.tags.value_of(tag).expect("validated at parse time")
        }
    }
}

impl Query {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let text = text.trim();
        if text.is_empty() || text == "*" {
            return Ok(Self::default());
        }
        let bad = |message: String| HarnessError::Query {
            query: text.to_string(),
            message,
        };
        let mut clauses = Vec::new();
        for part in text.split("&&") {
            let part = part.trim();
            let (key, value, negated) = if let Some((k, v)) = part.split_once("!=") {
                (k, v, true)
            } else if let Some((k, v)) = part.split_once('=') {
                (k, v, false)
            } else {
                return Err(bad(format!("clause {part:?} lacks `=` or `!=`")));
            };
            let (key, value) = (key.trim(), value.trim());
            let known = PLAIN_KEYS.contains(&key)
                || key
                    .strip_prefix("tags.")
                    .is_some_and(|t| TAG_KEYS.contains(&t));
            if !known {
                return Err(bad(format!("unknown key {key:?}")));
            }
            if value.is_empty() {
                return Err(bad(format!("empty value for {key}")));
            }
            clauses.push(Clause {
                key: key.to_string(),
                value: value.to_string(),
                negated,
            });
        }
        Ok(Self { clauses })
    }

    pub fn matches(&self, frame: &AnnotatedFrame) -> bool {
        self.clauses
            .iter()
            .all(|c| (field(frame, &c.key) == c.value) != c.negated)
    }
}

impl FromStr for Query {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("*");
        }
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| format!("{}{}{}", c.key, if c.negated { "!=" } else { "=" }, c.value))
            .collect();
        f.write_str(&parts.join(" && "))
    }
}
