use std::collections::BTreeMap;

use serde::Serialize;

use super::ast::Program;
use super::visit::{walk_mut, SiteMut, VarRole};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    Global,
    If,
    While,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Scope {
    pub id: usize,
    pub parent: Option<usize>,
    pub kind: ScopeKind,
    pub depth: usize,
    /// Statement path of the owning `if`/`while` (empty for the global scope).
    pub path: Vec<usize>,
    /// Variables owned by this scope, in declaration order.
    pub vars: Vec<String>,
}

/// Block structure of a program plus variable ownership.
///
/// A variable is owned by the scope of its first assignment, or of its first
/// occurrence when it is never assigned.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScopeTree {
    pub scopes: Vec<Scope>,
}

impl ScopeTree {
    pub fn global(&self) -> &Scope {
        &self.scopes[0]
    }

    pub fn len(&self) -> usize {
        self.scopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scopes.is_empty()
    }

    pub fn owner(&self, var: &str) -> Option<usize> {
        self.scopes.iter().find(|s| s.vars.iter().any(|v| v == var)).map(|s| s.id)
    }

    /// `scope` and its ancestors, outermost first.
    pub fn chain(&self, scope: usize) -> Vec<usize> {
        let mut out = vec![scope];
        let mut cur = scope;
        while let Some(p) = self.scopes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn is_ancestor_or_self(&self, ancestor: usize, scope: usize) -> bool {
        self.chain(scope).contains(&ancestor)
    }

    /// Variables that may fill a hole located in `scope`, in scope order
    /// (outermost first) then declaration order.
    pub fn eligible_vars(&self, scope: usize) -> Vec<&str> {
        self.chain(scope)
            .into_iter()
            .flat_map(|s| self.scopes[s].vars.iter().map(String::as_str))
            .collect()
    }

    pub fn all_vars(&self) -> Vec<&str> {
        self.scopes.iter().flat_map(|s| s.vars.iter().map(String::as_str)).collect()
    }
}

pub fn analyze_scopes(p: &Program) -> ScopeTree {
    let mut scratch = p.clone();
    let mut scopes = vec![Scope {
        id: 0,
        parent: None,
        kind: ScopeKind::Global,
        depth: 0,
        path: Vec::new(),
        vars: Vec::new(),
    }];
    // var -> (scope of first def, scope of first occurrence); ordering by first event
    let mut first_def: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut first_any: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut counter = 0usize;
    let mut depths = vec![0usize];

    walk_mut(
        &mut scratch,
        &mut |site| {
            if let SiteMut::Var { name, scope, role, .. } = site {
                let seq = counter;
                counter += 1;
                first_any.entry(name.clone()).or_insert((seq, scope));
                if role == VarRole::Def {
                    first_def.entry(name.clone()).or_insert((seq, scope));
                }
            }
        },
        &mut |ev| {
            let depth = depths[ev.parent] + 1;
            depths.push(depth);
            scopes.push(Scope {
                id: ev.scope,
                parent: Some(ev.parent),
                kind: if ev.is_while { ScopeKind::While } else { ScopeKind::If },
                depth,
                path: ev.path.to_vec(),
                vars: Vec::new(),
            });
        },
    );

    let mut owned: Vec<(usize, String, usize)> = first_any
        .iter()
        .map(|(name, any)| {
            let (seq, scope) = first_def.get(name).copied().unwrap_or(*any);
            (seq, name.clone(), scope)
        })
        .collect();
    owned.sort();
    for (_, name, scope) in owned {
        scopes[scope].vars.push(name);
    }
    ScopeTree { scopes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::{BinOp, Expr, Stmt};
    use crate::lang::{demo, parse};

    #[test]
    fn figure_program_has_two_scopes() {
        let tree = analyze_scopes(&demo());
        assert_eq!(tree.len(), 2);
        assert_eq!(tree.scopes[0].vars, vec!["a", "b"]);
        assert_eq!(tree.scopes[1].vars, vec!["c"]);
        assert_eq!(tree.scopes[1].parent, Some(0));
        assert_eq!(tree.eligible_vars(1), vec!["a", "b", "c"]);
    }

    #[test]
    fn flat_program_has_only_global() {
        let p = parse("qubits 1\na = 1\nh q[0]\nb = a\n").unwrap();
        let tree = analyze_scopes(&p);
        assert_eq!(tree.len(), 1);
        assert_eq!(tree.global().vars, vec!["a", "b"]);
    }

    #[test]
    fn nested_if_in_while_forms_a_chain() {
        let p = Program::new(
            1,
            vec![Stmt::While {
                cond: Expr::Lit(0),
                body: vec![Stmt::If { cond: Expr::Lit(1), body: vec![Stmt::assign("z", Expr::Lit(2))] }],
            }],
        );
        let tree = analyze_scopes(&p);
        assert_eq!(tree.len(), 3);
        assert_eq!(tree.scopes[1].kind, ScopeKind::While);
        assert_eq!(tree.scopes[2].kind, ScopeKind::If);
        assert_eq!(tree.scopes[2].parent, Some(1));
        assert_eq!(tree.scopes[1].parent, Some(0));
        assert_eq!(tree.chain(2), vec![0, 1, 2]);
        assert_eq!(tree.scopes[2].vars, vec!["z"]);
    }

    #[test]
    fn use_before_def_owned_by_definition_scope() {
        let p = Program::new(
            1,
            vec![
                Stmt::assign("a", Expr::bin(BinOp::Add, Expr::var("k"), Expr::Lit(1))),
                Stmt::If { cond: Expr::var("a"), body: vec![Stmt::assign("k", Expr::Lit(1))] },
                Stmt::If { cond: Expr::var("u"), body: vec![] },
            ],
        );
        let tree = analyze_scopes(&p);
        assert_eq!(tree.owner("a"), Some(0));
        assert_eq!(tree.owner("k"), Some(1));
        assert_eq!(tree.owner("u"), Some(0));
    }
}
