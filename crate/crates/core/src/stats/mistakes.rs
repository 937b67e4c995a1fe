use crate::bitstring::Bitstring;
use crate::taskgen::{TaskFunction, TaskRegistry};

/// True when `y` is wrong for `f` but some other registry function agrees
/// with `f` on every demonstration and maps the query to `y`.
pub fn understandable_mistake(
    registry: &TaskRegistry,
    demos: &[Bitstring],
    query: Bitstring,
    y: Bitstring,
    f: &TaskFunction,
) -> bool {
    if y == f.apply(query) {
        return false;
    }
    registry
        .iter()
        .filter(|g| g.id() != f.id())
        .any(|g| g.apply(query) == y && demos.iter().all(|&e| g.apply(e) == f.apply(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgen::build_registry;
    use proptest::prelude::*;

    fn b(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn rotation_confusion_on_uniform_demos() {
        let reg = build_registry(0, 8).unwrap();
        let identity = reg.get("identity").unwrap();
        let rotl1 = reg.get("rotl1").unwrap();
        let demos = [b("00000000"), b("11111111")];
        let query = b("10110000");
        let y = rotl1.apply(query);
        assert_ne!(y, query);
        assert!(understandable_mistake(&reg, &demos, query, y, identity));
        // correct answers are never mistakes
        assert!(!understandable_mistake(&reg, &demos, query, query, identity));
    }

    #[test]
    fn unexplained_answer_is_not_understandable() {
        let reg = build_registry(0, 8).unwrap();
        let identity = reg.get("identity").unwrap();
        let demos = [b("00000000"), b("11111111")];
        let query = b("10110000");
        let explained: Vec<_> = reg
            .iter()
            .filter(|g| demos.iter().all(|&e| g.apply(e) == e))
            .map(|g| g.apply(query))
            .collect();
        let y = Bitstring::all(8).find(|y| !explained.contains(y)).unwrap();
        assert!(!understandable_mistake(&reg, &demos, query, y, identity));
    }

    #[test]
    fn independent_of_registry_order() {
        let reg = build_registry(0, 8).unwrap();
        let reversed_ids: Vec<String> = reg.iter().rev().map(|f| f.id().to_string()).collect();
        let f = reg.get("flip_bits").unwrap();
        let demos = [b("01010101")];
        for y in Bitstring::all(8) {
            let fwd = understandable_mistake(&reg, &demos, b("00110011"), y, f);
            let witness = reversed_ids.iter().any(|id| {
                let g = reg.get(id).unwrap();
                id != f.id() && y != f.apply(b("00110011")) && g.apply(b("00110011")) == y && g.apply(demos[0]) == f.apply(demos[0])
            });
            assert_eq!(fwd, witness);
        }
    }

    proptest! {
        #[test]
        fn more_demos_never_create_mistakes(
            fi in 0usize..100, q in 0u32..256, y in 0u32..256,
            d in proptest::collection::vec(0u32..256, 1..6), extra in 0u32..256,
        ) {
            let reg = build_registry(0, 8).unwrap();
            let f = reg.iter().nth(fi).unwrap();
            let query = Bitstring::new(q, 8).unwrap();
            let y = Bitstring::new(y, 8).unwrap();
            let demos: Vec<_> = d.iter().map(|&v| Bitstring::new(v, 8).unwrap()).collect();
            let mut more = demos.clone();
            more.push(Bitstring::new(extra, 8).unwrap());
            let before = understandable_mistake(&reg, &demos, query, y, f);
            let after = understandable_mistake(&reg, &more, query, y, f);
            prop_assert!(!after || before);
        }
    }
}
