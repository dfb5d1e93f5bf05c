/// A trie mapping token sequences to identifiers drawn from a counter. A key
/// seen for the first time receives the counter's current value and the
/// counter is incremented; a repeated key returns its existing identifier.
#[derive(Clone, Debug)]
pub struct Trie<T> {
    nodes: Vec<Node<T>>,
    counter: u32,
}

#[derive(Clone, Debug)]
struct Node<T> {
    /// Sorted by token.
    children: Vec<(T, u32)>,
    value: Option<u32>,
}

impl<T> Node<T> {
    fn new() -> Self {
        Node { children: Vec::new(), value: None }
    }
}

impl<T: Ord + Copy> Trie<T> {
    pub fn new(first_id: u32) -> Self {
        Trie { nodes: vec![Node::new()], counter: first_id }
    }

    /// The identifier the next new key will receive.
    pub fn counter(&self) -> u32 {
        self.counter
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn get(&self, key: impl IntoIterator<Item = T>) -> Option<u32> {
        let mut node = 0usize;
        for tok in key {
            let children = &self.nodes[node].children;
            let i = children.binary_search_by(|(t, _)| t.cmp(&tok)).ok()?;
            node = children[i].1 as usize;
        }
        self.nodes[node].value
    }

    /// Returns the key's identifier and whether it was newly allocated.
    pub fn intern(&mut self, key: impl IntoIterator<Item = T>) -> (u32, bool) {
        let mut node = 0usize;
        for tok in key {
            let pos = self.nodes[node].children.binary_search_by(|(t, _)| t.cmp(&tok));
            node = match pos {
                Ok(i) => self.nodes[node].children[i].1 as usize,
                Err(i) => {
                    let child = self.nodes.len() as u32;
                    self.nodes.push(Node::new());
                    self.nodes[node].children.insert(i, (tok, child));
                    child as usize
                }
            };
        }
        match self.nodes[node].value {
            Some(id) => (id, false),
            None => {
                let id = self.counter;
                self.counter += 1;
                self.nodes[node].value = Some(id);
                (id, true)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_allocation() {
        let mut t: Trie<u8> = Trie::new(1);
        assert_eq!(t.intern(*b"abc"), (1, true));
        assert_eq!(t.intern(*b"ab"), (2, true));
        assert_eq!(t.intern(*b"abc"), (1, false));
        assert_eq!(t.get(*b"ab"), Some(2));
        assert_eq!(t.get(*b"a"), None);
        assert_eq!(t.get(*b"abcd"), None);
        assert_eq!(t.counter(), 3);
        // prefix sharing: a, b, c, then nothing new for "ab"
        assert_eq!(t.node_count(), 4);
    }

    #[test]
    fn empty_key() {
        let mut t: Trie<u64> = Trie::new(0);
        assert_eq!(t.intern([]), (0, true));
        assert_eq!(t.intern([7]), (1, true));
        assert_eq!(t.intern([]), (0, false));
    }
}
