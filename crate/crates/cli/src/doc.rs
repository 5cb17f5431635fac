//! Tree-structured report document: nested `key:` blocks with `key: value`
//! leaves, two-space indentation. Every emitted file reparses into the
//! values it was written from, so reports double as machine-readable data.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(String),
    Branch(Vec<(String, Node)>),
}

impl Node {
    pub fn branch() -> Node {
        Node::Branch(Vec::new())
    }

    pub fn push(&mut self, key: &str, node: Node) {
        match self {
            Node::Branch(children) => children.push((key.to_string(), node)),
            Node::Leaf(_) => panic!("cannot push into a leaf"),
        }
    }

    pub fn leaf(&mut self, key: &str, value: impl Into<String>) {
        self.push(key, Node::Leaf(value.into()));
    }

    /// Child lookup by path, for tests and round-trip checks.
    pub fn get(&self, path: &[&str]) -> Option<&Node> {
        let mut cur = self;
        for part in path {
            match cur {
                Node::Branch(children) => {
                    cur = children.iter().find(|(k, _)| k == part).map(|(_, n)| n)?;
                }
                Node::Leaf(_) => return None,
            }
        }
        Some(cur)
    }

    pub fn get_leaf(&self, path: &[&str]) -> Option<&str> {
        match self.get(path)? {
            Node::Leaf(v) => Some(v),
            Node::Branch(_) => None,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        if let Node::Branch(children) = self {
            for (key, node) in children {
                for _ in 0..depth {
                    out.push_str("  ");
                }
                match node {
                    Node::Leaf(value) => {
                        let _ = writeln!(out, "{key}: {value}");
                    }
                    Node::Branch(_) => {
                        let _ = writeln!(out, "{key}:");
                        node.render_into(out, depth + 1);
                    }
                }
            }
        }
    }
}

/// Parses a rendered document back into its tree.
pub fn parse(text: &str) -> Result<Node, String> {
    let mut root = Node::branch();
    let mut stack: Vec<*mut Node> = vec![&mut root];
    for (lineno, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let indent_chars = raw.len() - raw.trim_start_matches(' ').len();
        if indent_chars % 2 != 0 {
            return Err(format!("line {}: odd indentation", lineno + 1));
        }
        let depth = indent_chars / 2;
        if depth + 1 > stack.len() {
            return Err(format!("line {}: indentation jumps a level", lineno + 1));
        }
        stack.truncate(depth + 1);
        let line = raw.trim_start();
        // split on the first ": "; a line ending in ":" opens a block
        let (key, node) = if let Some(idx) = line.find(": ") {
            (line[..idx].to_string(), Node::Leaf(line[idx + 2..].to_string()))
        } else if let Some(stripped) = line.strip_suffix(':') {
            (stripped.to_string(), Node::branch())
        } else {
            return Err(format!("line {}: expected 'key: value' or 'key:'", lineno + 1));
        };
        // push into the current top; raw pointers sidestep the borrow of
        // nested &mut through the stack
        unsafe {
            let top: &mut Node = &mut *stack[depth];
            match top {
                Node::Branch(children) => {
                    children.push((key, node));
                    let last: *mut Node = &mut children.last_mut().unwrap().1;
                    stack.push(last);
                }
                Node::Leaf(_) => {
                    return Err(format!("line {}: cannot nest under a value", lineno + 1));
                }
            }
        }
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut doc = Node::branch();
        doc.leaf("report", "analyze");
        let mut inner = Node::branch();
        inner.leaf("count", "7");
        inner.leaf("ratio", "0.7686999999999999");
        let mut deep = Node::branch();
        deep.leaf("gmm:hl", "0.72");
        inner.push("ratios", deep);
        doc.push("input", inner);
        doc.leaf("tail", "done");

        let text = doc.render();
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed, doc);
        assert_eq!(parsed.get_leaf(&["input", "ratios", "gmm:hl"]), Some("0.72"));
    }

    #[test]
    fn parse_rejects_bad_indent() {
        assert!(parse("a:\n   b: 1").is_err());
        assert!(parse("a:\n    b: 1").is_err());
        assert!(parse("junk").is_err());
    }
}
