//! Ontology DAG construction from stanza text.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ontology::Branch;

/// How a term links to a parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    IsA,
    PartOf,
}

/// A single ontology term with its parent links (indices into the owning DAG).
#[derive(Debug, Clone)]
pub struct GoTerm {
    pub id: String,
    pub name: String,
    pub branch: Branch,
    pub parents: Vec<(usize, LinkKind)>,
}

/// Immutable ontology DAG. Terms are stored sorted by id; parent links only
/// ever point at terms in the same branch.
#[derive(Debug, Clone)]
pub struct GoDag {
    terms: Vec<GoTerm>,
    index: BTreeMap<String, usize>,
}

#[derive(Default)]
struct RawTerm {
    id: Option<String>,
    name: String,
    namespace: Option<String>,
    obsolete: bool,
    parents: Vec<(String, LinkKind)>,
    start_line: usize,
}

impl RawTerm {
    fn is_blank(&self) -> bool {
        self.id.is_none()
            && self.namespace.is_none()
            && self.parents.is_empty()
            && self.name.is_empty()
    }
}

impl GoDag {
    /// Parse stanza-format ontology text (`[Term]` blocks with id, name,
    /// namespace, is_a, `relationship: part_of`, is_obsolete). Obsolete terms
    /// are dropped along with any links pointing at them; relationship types
    /// other than part_of are ignored.
    pub fn parse_obo(text: &str) -> Result<GoDag> {
        let mut raw_terms: Vec<RawTerm> = Vec::new();
        let mut current: Option<RawTerm> = None;
        let mut in_term_stanza = false;

        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim_end();
            if line.starts_with('[') {
                if let Some(raw) = current.take() {
                    raw_terms.push(raw);
                }
                in_term_stanza = line == "[Term]";
                if in_term_stanza {
                    current = Some(RawTerm {
                        start_line: lineno,
                        ..RawTerm::default()
                    });
                }
                continue;
            }
            if !in_term_stanza {
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let raw = current
                .as_mut()
                .expect("term stanza flag implies a pending term");
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("expected key: value, got {line:?}")))?;
            let value = strip_comment(value.trim());
            match key.trim() {
                "id" => raw.id = Some(value.to_string()),
                "name" => raw.name = value.to_string(),
                "namespace" => raw.namespace = Some(value.to_string()),
                "is_a" => {
                    let target = value.split_whitespace().next().ok_or_else(|| {
                        Error::parse(lineno, "is_a with empty target".to_string())
                    })?;
                    raw.parents.push((target.to_string(), LinkKind::IsA));
                }
                "relationship" => {
                    let mut parts = value.split_whitespace();
                    let kind = parts.next().unwrap_or_default();
                    if kind == "part_of" {
                        let target = parts.next().ok_or_else(|| {
                            Error::parse(lineno, "part_of with no target".to_string())
                        })?;
                        raw.parents.push((target.to_string(), LinkKind::PartOf));
                    }
                }
                "is_obsolete" => raw.obsolete = value == "true",
                _ => {}
            }
        }
        if let Some(raw) = current.take() {
            raw_terms.push(raw);
        }
        raw_terms.retain(|r| !r.is_blank());

        // Obsolete ids must be known before link resolution so that links to
        // them can be dropped rather than reported as dangling.
        let mut obsolete = BTreeSet::new();
        for raw in &raw_terms {
            if raw.obsolete {
                if let Some(id) = &raw.id {
                    obsolete.insert(id.clone());
                }
            }
        }

        let mut kept: Vec<(String, String, Branch, Vec<(String, LinkKind)>)> = Vec::new();
        for raw in raw_terms {
            let id = raw.id.ok_or_else(|| {
                Error::Format(format!("term stanza at line {} has no id", raw.start_line))
            })?;
            if raw.obsolete {
                continue;
            }
            let namespace = raw.namespace.ok_or_else(|| {
                Error::Format(format!("term {id} has no namespace"))
            })?;
            let branch = Branch::from_namespace(&namespace).ok_or_else(|| {
                Error::Format(format!("term {id} has unknown namespace {namespace:?}"))
            })?;
            kept.push((id, raw.name, branch, raw.parents));
        }
        kept.sort_by(|a, b| a.0.cmp(&b.0));

        let mut index = BTreeMap::new();
        for (pos, (id, ..)) in kept.iter().enumerate() {
            if index.insert(id.clone(), pos).is_some() {
                return Err(Error::Format(format!("duplicate term id {id}")));
            }
        }

        let mut terms = Vec::with_capacity(kept.len());
        for (id, name, branch, raw_parents) in kept {
            let mut parents = Vec::new();
            for (target, kind) in raw_parents {
                if obsolete.contains(&target) {
                    continue;
                }
                let Some(&pidx) = index.get(&target) else {
                    return Err(Error::Format(format!(
                        "term {id} links to unknown term {target}"
                    )));
                };
                parents.push((pidx, kind));
            }
            parents.sort_by_key(|&(p, _)| p);
            parents.dedup_by_key(|&mut (p, _)| p);
            terms.push(GoTerm {
                id,
                name,
                branch,
                parents,
            });
        }

        // Cross-branch links would let closure escape its branch; stanza sets
        // built per-branch never contain them, so dropping is safe.
        for t in 0..terms.len() {
            let branch = terms[t].branch;
            let before = terms[t].parents.len();
            let kept_parents: Vec<(usize, LinkKind)> = terms[t]
                .parents
                .iter()
                .copied()
                .filter(|&(p, _)| terms[p].branch == branch)
                .collect();
            if kept_parents.len() != before {
                log::warn!(
                    "term {} has parent links outside its branch; dropped",
                    terms[t].id
                );
            }
            terms[t].parents = kept_parents;
        }

        let dag = GoDag { terms, index };
        dag.check_acyclic()?;
        Ok(dag)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm over child -> parent edges.
        let n = self.terms.len();
        let mut out_degree: Vec<usize> = self.terms.iter().map(|t| t.parents.len()).collect();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (child, term) in self.terms.iter().enumerate() {
            for &(parent, _) in &term.parents {
                children[parent].push(child);
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&t| out_degree[t] == 0).collect();
        let mut seen = 0usize;
        while let Some(t) = queue.pop() {
            seen += 1;
            for &child in &children[t] {
                out_degree[child] -= 1;
                if out_degree[child] == 0 {
                    queue.push(child);
                }
            }
        }
        if seen != n {
            return Err(Error::Format(
                "ontology contains a cycle through is_a/part_of links".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, idx: usize) -> &GoTerm {
        &self.terms[idx]
    }

    pub fn terms(&self) -> impl Iterator<Item = &GoTerm> {
        self.terms.iter()
    }

    pub fn lookup(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Total number of parent links across all terms.
    pub fn edge_count(&self) -> usize {
        self.terms.iter().map(|t| t.parents.len()).sum()
    }

    /// All strict ancestors of a term (same branch by construction), sorted.
    pub fn ancestors(&self, idx: usize) -> Vec<usize> {
        let mut seen = vec![false; self.terms.len()];
        let mut stack: Vec<usize> = self.terms[idx].parents.iter().map(|&(p, _)| p).collect();
        while let Some(t) = stack.pop() {
            if seen[t] {
                continue;
            }
            seen[t] = true;
            stack.extend(self.terms[t].parents.iter().map(|&(p, _)| p));
        }
        (0..self.terms.len()).filter(|&t| seen[t]).collect()
    }

    /// Ancestors including the term itself, sorted.
    pub fn ancestors_with_self(&self, idx: usize) -> Vec<usize> {
        let mut anc = self.ancestors(idx);
        let pos = anc.partition_point(|&t| t < idx);
        anc.insert(pos, idx);
        anc
    }

    /// Terms of the given branch with no parents.
    pub fn roots(&self, branch: Branch) -> Vec<usize> {
        (0..self.terms.len())
            .filter(|&t| self.terms[t].branch == branch && self.terms[t].parents.is_empty())
            .collect()
    }

    /// Sub-DAG containing only terms of one branch. Parent links survive
    /// unchanged because they never cross branches.
    pub fn branch_filter(&self, branch: Branch) -> GoDag {
        let keep: Vec<usize> = (0..self.terms.len())
            .filter(|&t| self.terms[t].branch == branch)
            .collect();
        if keep.is_empty() {
            log::warn!("branch {branch} has no terms");
        }
        let mut remap = vec![usize::MAX; self.terms.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut terms = Vec::with_capacity(keep.len());
        let mut index = BTreeMap::new();
        for &old in &keep {
            let t = &self.terms[old];
            let parents = t
                .parents
                .iter()
                .map(|&(p, kind)| (remap[p], kind))
                .collect();
            index.insert(t.id.clone(), terms.len());
            terms.push(GoTerm {
                id: t.id.clone(),
                name: t.name.clone(),
                branch: t.branch,
                parents,
            });
        }
        GoDag { terms, index }
    }
}

fn strip_comment(value: &str) -> &str {
    match value.split_once(" ! ") {
        Some((v, _)) => v.trim(),
        None => value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn stanza(id: &str, ns: &str, lines: &[&str]) -> String {
        let mut s = format!("[Term]\nid: {id}\nname: term {id}\nnamespace: {ns}\n");
        for l in lines {
            s.push_str(l);
            s.push('\n');
        }
        s.push('\n');
        s
    }

    #[test]
    fn two_terms_one_link() {
        let text = stanza("GO:0000001", "molecular_function", &[])
            + &stanza(
                "GO:0000002",
                "molecular_function",
                &["is_a: GO:0000001 ! parent"],
            );
        let dag = GoDag::parse_obo(&text).unwrap();
        assert_eq!(dag.len(), 2);
        assert_eq!(dag.edge_count(), 1);
        let child = dag.lookup("GO:0000002").unwrap();
        assert_eq!(dag.ancestors(child), vec![dag.lookup("GO:0000001").unwrap()]);
    }

    #[test]
    fn unknown_relationship_types_ignored() {
        let text = stanza("GO:0000001", "biological_process", &[])
            + &stanza(
                "GO:0000002",
                "biological_process",
                &[
                    "relationship: regulates GO:0000001 ! ignored",
                    "relationship: part_of GO:0000001 ! kept",
                ],
            );
        let dag = GoDag::parse_obo(&text).unwrap();
        assert_eq!(dag.edge_count(), 1);
        let child = dag.lookup("GO:0000002").unwrap();
        assert_eq!(dag.term(child).parents[0].1, LinkKind::PartOf);
    }

    #[test]
    fn obsolete_terms_dropped_with_links_to_them() {
        let text = stanza(
            "GO:0000001",
            "cellular_component",
            &["is_obsolete: true"],
        ) + &stanza(
            "GO:0000002",
            "cellular_component",
            &["is_a: GO:0000001 ! gone"],
        );
        let dag = GoDag::parse_obo(&text).unwrap();
        assert_eq!(dag.len(), 1);
        assert!(dag.lookup("GO:0000001").is_none());
        assert_eq!(dag.edge_count(), 0);
    }

    #[test]
    fn dangling_parent_is_a_format_error() {
        let text = stanza(
            "GO:0000002",
            "molecular_function",
            &["is_a: GO:0099999 ! nowhere"],
        );
        let err = GoDag::parse_obo(&text).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn cycle_is_a_format_error() {
        let text = stanza(
            "GO:0000001",
            "molecular_function",
            &["is_a: GO:0000002 ! down"],
        ) + &stanza(
            "GO:0000002",
            "molecular_function",
            &["is_a: GO:0000001 ! up"],
        );
        let err = GoDag::parse_obo(&text).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = stanza("GO:0000001", "molecular_function", &[]).repeat(2);
        assert!(GoDag::parse_obo(&text).is_err());
    }

    #[test]
    fn typedef_stanzas_skipped() {
        let text = "[Typedef]\nid: part_of\nname: part of\n\n".to_string()
            + &stanza("GO:0000001", "molecular_function", &[]);
        let dag = GoDag::parse_obo(&text).unwrap();
        assert_eq!(dag.len(), 1);
    }

    #[test]
    fn branch_filter_keeps_only_the_branch() {
        let text = stanza("GO:0000001", "molecular_function", &[])
            + &stanza("GO:0000002", "molecular_function", &["is_a: GO:0000001"])
            + &stanza("GO:0000003", "biological_process", &[])
            + &stanza("GO:0000004", "biological_process", &["is_a: GO:0000003"])
            + &stanza("GO:0000005", "biological_process", &["is_a: GO:0000004"]);
        let dag = GoDag::parse_obo(&text).unwrap();
        let mfo = dag.branch_filter(Branch::Mfo);
        assert_eq!(mfo.len(), 2);
        assert_eq!(mfo.edge_count(), 1);
        let bpo = dag.branch_filter(Branch::Bpo);
        assert_eq!(bpo.len(), 3);
        let cco = dag.branch_filter(Branch::Cco);
        assert!(cco.is_empty());
    }

    fn random_dag(rng: &mut ChaCha12Rng) -> GoDag {
        // Parents always point at smaller ids, so the result is acyclic by
        // construction.
        let n = rng.gen_range(2..=50);
        let mut text = String::new();
        for i in 0..n {
            let id = format!("GO:{i:07}");
            let mut lines = Vec::new();
            if i > 0 {
                let n_parents = rng.gen_range(1..=2.min(i));
                let mut chosen = std::collections::BTreeSet::new();
                while chosen.len() < n_parents {
                    chosen.insert(rng.gen_range(0..i));
                }
                for p in chosen {
                    lines.push(format!("is_a: GO:{p:07}"));
                }
            }
            let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
            text.push_str(&stanza(&id, "molecular_function", &refs));
        }
        GoDag::parse_obo(&text).unwrap()
    }

    #[test]
    fn ancestors_match_brute_force_reachability() {
        for seed in 0..20 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let dag = random_dag(&mut rng);
            let n = dag.len();
            // Boolean transitive closure by iterating to a fixed point.
            let mut reach = vec![vec![false; n]; n];
            for t in 0..n {
                for &(p, _) in &dag.term(t).parents {
                    reach[t][p] = true;
                }
            }
            let mut changed = true;
            while changed {
                changed = false;
                for a in 0..n {
                    for b in 0..n {
                        if !reach[a][b] {
                            continue;
                        }
                        for c in 0..n {
                            if reach[b][c] && !reach[a][c] {
                                reach[a][c] = true;
                                changed = true;
                            }
                        }
                    }
                }
            }
            for t in 0..n {
                let expected: Vec<usize> = (0..n).filter(|&a| reach[t][a]).collect();
                assert_eq!(dag.ancestors(t), expected, "seed {seed} term {t}");
            }
        }
    }
}
