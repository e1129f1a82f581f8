use crate::corpus::{
    RelationInstance, Vocabulary, E1_END_ID, E1_START_ID, E2_END_ID, E2_START_ID,
};

/// Token ids with `[E1] … [/E1]` and `[E2] … [/E2]` wrapped around the head
/// and tail mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedInstance {
    pub ids: Vec<usize>,
    /// Position of `[E1]`.
    pub e1: usize,
    /// Position of `[E2]`.
    pub e2: usize,
    /// For each position, the index of the source token, or `None` for a marker.
    pub source: Vec<Option<usize>>,
}

/// Inserts the four markers. Source indices shift right accordingly.
pub fn mark(inst: &RelationInstance, vocab: &Vocabulary) -> MarkedInstance {
    let n = inst.tokens.len();
    let mut ids = Vec::with_capacity(n + 4);
    let mut source = Vec::with_capacity(n + 4);
    let (mut e1, mut e2) = (0, 0);
    let mut push = |id: usize, src: Option<usize>| {
        ids.push(id);
        source.push(src);
        ids.len() - 1
    };
    for (i, tok) in inst.tokens.iter().enumerate() {
        if i == inst.head.start() {
            e1 = push(E1_START_ID, None);
        }
        if i == inst.tail.start() {
            e2 = push(E2_START_ID, None);
        }
        push(vocab.id(tok), Some(i));
        if i + 1 == inst.head.end() {
            push(E1_END_ID, None);
        }
        if i + 1 == inst.tail.end() {
            push(E2_END_ID, None);
        }
    }
    MarkedInstance {
        ids,
        e1,
        e2,
        source,
    }
}

impl MarkedInstance {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_marker(&self, pos: usize) -> bool {
        self.source[pos].is_none()
    }

    /// Marked position of source token `i`.
    pub fn position_of(&self, i: usize) -> Option<usize> {
        self.source.iter().position(|s| *s == Some(i))
    }

    /// Copy with position `pos` deleted and later positions shifted left.
    /// Returns `None` if `pos` is a marker or out of range.
    pub fn without(&self, pos: usize) -> Option<MarkedInstance> {
        if pos >= self.len() || self.is_marker(pos) {
            return None;
        }
        let mut ids = self.ids.clone();
        let mut source = self.source.clone();
        ids.remove(pos);
        source.remove(pos);
        let shift = |p: usize| if p > pos { p - 1 } else { p };
        Some(MarkedInstance {
            ids,
            e1: shift(self.e1),
            e2: shift(self.e2),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;

    fn setup(head: Span, tail: Span) -> (RelationInstance, Vocabulary) {
        let tokens: Vec<String> = "w0 w1 w2 w3 w4".split(' ').map(String::from).collect();
        let inst = RelationInstance::new(tokens, head, tail, "r");
        let vocab = Vocabulary::build(std::slice::from_ref(&inst), 1);
        (inst, vocab)
    }

    fn render(m: &MarkedInstance, v: &Vocabulary) -> String {
        m.ids.iter().map(|&i| v.token(i)).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn head_before_tail() {
        let (inst, v) = setup(Span(0, 2), Span(3, 4));
        let m = mark(&inst, &v);
        assert_eq!(render(&m, &v), "[E1] w0 w1 [/E1] w2 [E2] w3 [/E2] w4");
        assert_eq!((m.e1, m.e2), (0, 5));
        assert_eq!(m.position_of(3), Some(6));
        assert_eq!(m.position_of(2), Some(4));
    }

    #[test]
    fn tail_before_head_and_adjacent() {
        let (inst, v) = setup(Span(2, 3), Span(1, 2));
        let m = mark(&inst, &v);
        assert_eq!(render(&m, &v), "w0 [E2] w1 [/E2] [E1] w2 [/E1] w3 w4");
        assert_eq!((m.e1, m.e2), (4, 1));
    }

    #[test]
    fn without_reindexes_markers() {
        let (inst, v) = setup(Span(1, 2), Span(3, 4));
        let m = mark(&inst, &v);
        // w0 [E1] w1 [/E1] w2 [E2] w3 [/E2] w4
        let r = m.without(0).unwrap();
        assert_eq!((r.e1, r.e2), (0, 4));
        assert_eq!(render(&r, &v), "[E1] w1 [/E1] w2 [E2] w3 [/E2] w4");
        assert!(m.without(1).is_none());
        assert!(m.without(99).is_none());
    }
}
