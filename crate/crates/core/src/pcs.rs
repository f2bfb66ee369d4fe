//! Single-channel priority encodings of NCS configurations and the
//! superseding steps of priority channel systems.

use crate::ncs::Config;
use crate::sym::Sym;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcsError {
    #[error("malformed channel: {0}")]
    Malformed(String),
    #[error("configuration deeper than {0}")]
    TooDeep(usize),
}

/// A message `(a, w)`; `None` is the end marker `$`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PcsLetter {
    pub symbol: Option<Sym>,
    pub priority: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Default)]
pub struct PcsChannel(pub Vec<PcsLetter>);

impl fmt::Display for PcsLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.symbol {
            Some(s) => write!(f, "({s},{})", self.priority),
            None => write!(f, "($,{})", self.priority),
        }
    }
}

impl fmt::Display for PcsChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|l| write!(f, "{l}"))
    }
}

impl PcsChannel {
    /// Parse `(q1,2)(q2,1)($,2)`.
    pub fn parse(text: &str) -> Result<PcsChannel, PcsError> {
        let mut out = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .and_then(|r| r.split_once(')'))
                .ok_or_else(|| PcsError::Malformed(format!("expected `(a,w)` at `{rest}`")))?;
            let (sym, prio) = body
                .0
                .rsplit_once(',')
                .ok_or_else(|| PcsError::Malformed(format!("missing priority in `({})`", body.0)))?;
            let priority = prio
                .trim()
                .parse()
                .map_err(|_| PcsError::Malformed(format!("bad priority `{prio}`")))?;
            let sym = sym.trim();
            out.push(PcsLetter {
                symbol: (sym != "$").then(|| Sym::new(sym)),
                priority,
            });
            rest = body.1.trim_start();
        }
        Ok(PcsChannel(out))
    }
}

/// Root state in the control; every other node, in pre-order, as
/// `(q, k − level)`; then `($, k − 1)`.
pub fn encode_config(c: &Config, k: usize) -> Result<(Sym, PcsChannel), PcsError> {
    if c.depth() > k {
        return Err(PcsError::TooDeep(k));
    }
    fn walk(c: &Config, level: usize, k: usize, out: &mut Vec<PcsLetter>) {
        for ch in &c.children {
            out.push(PcsLetter {
                symbol: Some(ch.state),
                priority: k - level,
            });
            walk(ch, level + 1, k, out);
        }
    }
    let mut out = Vec::new();
    walk(c, 1, k, &mut out);
    out.push(PcsLetter {
        symbol: None,
        priority: k.saturating_sub(1),
    });
    Ok((c.state, PcsChannel(out)))
}

/// Inverse of [`encode_config`].
pub fn decode(control: Sym, ch: &PcsChannel, k: usize) -> Result<Config, PcsError> {
    let letters = &ch.0;
    let Some((end, body)) = letters.split_last() else {
        return Err(PcsError::Malformed("empty channel".into()));
    };
    if end.symbol.is_some() || end.priority != k.saturating_sub(1) {
        return Err(PcsError::Malformed(format!(
            "channel must end in ($,{})",
            k.saturating_sub(1)
        )));
    }
    // stack of open nodes; index 0 is the root at level 0
    let mut stack: Vec<(Sym, Vec<Config>)> = vec![(control, Vec::new())];
    for l in body {
        let Some(sym) = l.symbol else {
            return Err(PcsError::Malformed("`$` before the end".into()));
        };
        if l.priority >= k {
            return Err(PcsError::Malformed(format!("priority {} above {}", l.priority, k - 1)));
        }
        let level = k - l.priority;
        if level > stack.len() {
            return Err(PcsError::Malformed(format!("{l} has no parent at level {}", level - 1)));
        }
        while stack.len() > level {
            let (s, kids) = stack.pop().unwrap();
            stack.last_mut().unwrap().1.push(Config::new(s, kids));
        }
        stack.push((sym, Vec::new()));
    }
    while stack.len() > 1 {
        let (s, kids) = stack.pop().unwrap();
        stack.last_mut().unwrap().1.push(Config::new(s, kids));
    }
    let (s, kids) = stack.pop().unwrap();
    Ok(Config::new(s, kids))
}

/// Delete one letter whose successor has at least its priority.
pub fn superseding_steps(ch: &PcsChannel) -> Vec<PcsChannel> {
    let v = &ch.0;
    let mut out: Vec<PcsChannel> = (0..v.len().saturating_sub(1))
        .filter(|&i| v[i].priority <= v[i + 1].priority)
        .map(|i| {
            let mut w = v.clone();
            w.remove(i);
            PcsChannel(w)
        })
        .collect();
    out.sort();
    out.dedup();
    out
}
