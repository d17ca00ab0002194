//! JSON documents: instances (plain or group-compressed) and allocations.
//!
//! Every rational is written as a `"p/q"` string; readers also accept
//! integers and finite decimals.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Agent, AgentGroup, Allocation, GroupedInstance, Instance};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AgentEntry {
    id: String,
    weight: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupEntry {
    id: String,
    count: usize,
    weight: String,
}

type CostTable = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agents: Option<Vec<AgentEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agent_groups: Option<Vec<GroupEntry>>,
    items: Vec<String>,
    costs: CostTable,
}

fn cost_table<'a>(rows: impl Iterator<Item = (&'a String, &'a Vec<Rational>)>, items: &[String]) -> CostTable {
    rows.map(|(id, row)| {
        let entries = items
            .iter()
            .zip(row)
            .map(|(e, c)| (e.clone(), format_rational(c)))
            .collect();
        (id.clone(), entries)
    })
    .collect()
}

fn cost_rows(ids: &[&str], items: &[String], costs: &CostTable) -> Result<Vec<Vec<Rational>>> {
    if let Some(unknown) = costs.keys().find(|k| !ids.contains(&k.as_str())) {
        return Err(Error::UnknownAgent(unknown.clone()));
    }
    ids.iter()
        .map(|id| {
            let row = costs
                .get(*id)
                .ok_or_else(|| Error::Format(format!("no costs for `{id}`")))?;
            if let Some(unknown) = row.keys().find(|e| !items.contains(e)) {
                return Err(Error::UnknownItem(unknown.clone()));
            }
            items
                .iter()
                .map(|e| {
                    let text = row
                        .get(e)
                        .ok_or_else(|| Error::Format(format!("no cost for `{id}` on `{e}`")))?;
                    parse_rational(text)
                })
                .collect()
        })
        .collect()
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        InstanceDoc {
            agents: Some(
                inst.agents
                    .iter()
                    .map(|a| AgentEntry {
                        id: a.id.clone(),
                        weight: format_rational(&a.weight),
                    })
                    .collect(),
            ),
            agent_groups: None,
            items: inst.items.clone(),
            costs: cost_table(inst.agents.iter().map(|a| &a.id).zip(&inst.costs), &inst.items),
        }
    }
}

impl From<&GroupedInstance> for InstanceDoc {
    fn from(g: &GroupedInstance) -> Self {
        InstanceDoc {
            agents: None,
            agent_groups: Some(
                g.groups
                    .iter()
                    .map(|a| GroupEntry {
                        id: a.id.clone(),
                        count: a.count,
                        weight: format_rational(&a.weight),
                    })
                    .collect(),
            ),
            items: g.items.clone(),
            costs: cost_table(g.groups.iter().map(|a| &a.id).zip(&g.costs), &g.items),
        }
    }
}

/// Either form of instance document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceFile {
    Plain(Instance),
    Grouped(GroupedInstance),
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        match self {
            InstanceFile::Plain(inst) => Ok(inst),
            InstanceFile::Grouped(g) => g.expand(),
        }
    }
}

impl TryFrom<InstanceDoc> for InstanceFile {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        match (doc.agents, doc.agent_groups) {
            (Some(agents), None) => {
                let ids: Vec<&str> = agents.iter().map(|a| a.id.as_str()).collect();
                let costs = cost_rows(&ids, &doc.items, &doc.costs)?;
                let agents = agents
                    .iter()
                    .map(|a| {
                        Ok(Agent {
                            id: a.id.clone(),
                            weight: parse_rational(&a.weight)?,
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(InstanceFile::Plain(Instance::new(agents, doc.items, costs)?))
            }
            (None, Some(groups)) => {
                let ids: Vec<&str> = groups.iter().map(|a| a.id.as_str()).collect();
                let costs = cost_rows(&ids, &doc.items, &doc.costs)?;
                let groups = groups
                    .iter()
                    .map(|a| {
                        Ok(AgentGroup {
                            id: a.id.clone(),
                            count: a.count,
                            weight: parse_rational(&a.weight)?,
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(InstanceFile::Grouped(GroupedInstance {
                    groups,
                    items: doc.items,
                    costs,
                }))
            }
            _ => Err(Error::Format(
                "exactly one of `agents` and `agent_groups` is required".into(),
            )),
        }
    }
}

fn format_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn parse_instance_file(text: &str) -> Result<InstanceFile> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(format_err)?;
    InstanceFile::try_from(doc)
}

/// Reads either form; grouped documents are expanded.
pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_file(text)?.into_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    to_pretty(&InstanceDoc::from(inst))
}

pub fn grouped_to_json(g: &GroupedInstance) -> String {
    to_pretty(&InstanceDoc::from(g))
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable document");
    text.push('\n');
    text
}

impl Serialize for Instance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InstanceDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = InstanceDoc::deserialize(d)?;
        InstanceFile::try_from(doc)
            .and_then(InstanceFile::into_instance)
            .map_err(serde::de::Error::custom)
    }
}

/// An allocation document: item id to agent id, plus free-form metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationFile {
    pub assignment: BTreeMap<String, String>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl AllocationFile {
    pub fn new(inst: &Instance, alloc: &Allocation, metadata: serde_json::Value) -> Self {
        let assignment = alloc
            .owner
            .iter()
            .enumerate()
            .filter_map(|(e, o)| o.map(|a| (inst.items[e].clone(), inst.agents[a].id.clone())))
            .collect();
        AllocationFile { assignment, metadata }
    }

    /// Resolves ids against `inst`; items missing from the map stay
    /// unallocated.
    pub fn to_allocation(&self, inst: &Instance) -> Result<Allocation> {
        let mut alloc = Allocation::empty(inst.m());
        for (item, agent) in &self.assignment {
            let e = inst.item_index(item).ok_or_else(|| Error::UnknownItem(item.clone()))?;
            let a = inst
                .agent_index(agent)
                .ok_or_else(|| Error::UnknownAgent(agent.clone()))?;
            alloc.owner[e] = Some(a);
        }
        Ok(alloc)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(format_err)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::example_table1;
    use crate::lower_bound::gen_lower_bound;
    use crate::rational::q;

    #[test]
    fn instance_round_trip() {
        let inst = example_table1(&q(1, 4)).unwrap();
        let text = instance_to_json(&inst);
        assert!(text.contains("\"3/4\""));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn decimals_are_accepted() {
        let text = r#"{"agents":[{"id":"x","weight":"0.5"}],"items":["e"],"costs":{"x":{"e":"2"}}}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.weight(0), &q(1, 2));
        assert_eq!(inst.cost(0, 0), &q(2, 1));
    }

    #[test]
    fn missing_and_unknown_entries() {
        let missing = r#"{"agents":[{"id":"x","weight":"1"}],"items":["e"],"costs":{"x":{}}}"#;
        assert!(matches!(parse_instance(missing), Err(Error::Format(_))));
        let unknown = r#"{"agents":[{"id":"x","weight":"1"}],"items":["e"],"costs":{"x":{"e":"1","f":"1"}}}"#;
        assert_eq!(parse_instance(unknown), Err(Error::UnknownItem("f".into())));
        let bad = r#"{"agents":[{"id":"x","weight":"1/0"}],"items":[],"costs":{"x":{}}}"#;
        assert!(matches!(parse_instance(bad), Err(Error::ZeroDenominator(_))));
        assert!(matches!(parse_instance("not json"), Err(Error::Format(_))));
    }

    #[test]
    fn grouped_round_trip() {
        let lb = gen_lower_bound(2).unwrap();
        let text = grouped_to_json(&lb.grouped);
        match parse_instance_file(&text).unwrap() {
            InstanceFile::Grouped(g) => assert_eq!(g, lb.grouped),
            other => panic!("expected grouped, got {other:?}"),
        }
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.n(), 5);
        assert_eq!(inst.agents[1].id, "g2:1");
    }

    #[test]
    fn allocation_round_trip() {
        let inst = example_table1(&q(1, 4)).unwrap();
        let alloc = Allocation::from_owners([0, 1]);
        let file = AllocationFile::new(&inst, &alloc, serde_json::json!({"method": "test"}));
        let back = AllocationFile::parse(&file.to_json()).unwrap();
        assert_eq!(back.to_allocation(&inst).unwrap(), alloc);
        let stray = AllocationFile {
            assignment: [("e9".to_string(), "a1".to_string())].into(),
            metadata: serde_json::Value::Null,
        };
        assert_eq!(stray.to_allocation(&inst), Err(Error::UnknownItem("e9".into())));
    }
}
