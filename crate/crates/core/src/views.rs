//! Quorum views: how the maximum tag is spread over a responding quorum.
//!
//! * `View1`: every member reports the maximum tag; the write is complete.
//! * `View2`: no intersection with another quorum is covered by the
//!   maximum holders; the write with the maximum tag cannot be complete.
//! * `View3`: some intersection is covered; the write may or may not be
//!   complete and the reader cannot tell.

use crate::error::{Error, Result};
use crate::quorum::{QuorumSystem, ServerSet};
use crate::types::Tag;

/// Tags reported by exactly the members of one quorum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagView {
    pub quorum: usize,
    /// `(server, tag)` pairs, one per quorum member.
    pub tags: Vec<(u32, Tag)>,
}

impl TagView {
    pub fn new(quorum: usize, tags: impl IntoIterator<Item = (u32, Tag)>) -> Self {
        let mut tags: Vec<_> = tags.into_iter().collect();
        tags.sort_unstable_by_key(|&(s, _)| s);
        Self { quorum, tags }
    }

    fn check(&self, qs: &QuorumSystem) -> Result<ServerSet> {
        if self.quorum >= qs.len() {
            return Err(Error::InvalidInput(format!(
                "quorum index {} out of range",
                self.quorum
            )));
        }
        let members = qs.quorum(self.quorum);
        let domain: ServerSet = self.tags.iter().map(|&(s, _)| s).collect();
        if domain != members || self.tags.len() != members.len() {
            return Err(Error::InvalidInput(format!(
                "view covers {domain:?} but quorum {} is {members:?}",
                self.quorum
            )));
        }
        Ok(members)
    }

    /// Maximum tag among `among` and the servers holding it.
    fn max_holders(&self, among: ServerSet) -> (Tag, ServerSet) {
        let max = self
            .tags
            .iter()
            .filter(|(s, _)| among.contains(*s))
            .map(|&(_, t)| t)
            .max()
            .unwrap_or(Tag::INITIAL);
        let holders = self
            .tags
            .iter()
            .filter(|&&(s, t)| among.contains(s) && t == max)
            .map(|&(s, _)| s)
            .collect();
        (max, holders)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViewClass {
    View1,
    View2,
    View3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterativeDecision {
    /// Return the value carried by any of `holders`, all reporting `tag`.
    ReturnTag { tag: Tag, holders: ServerSet },
    /// Wait for a quorum of read acknowledgements.
    AwaitAcks,
}

fn classify_members(
    qs: &QuorumSystem,
    quorum: usize,
    members: ServerSet,
    holders: ServerSet,
) -> ViewClass {
    if members.is_subset(holders) {
        return ViewClass::View1;
    }
    let covered = qs
        .quorums()
        .iter()
        .enumerate()
        .any(|(i, other)| i != quorum && other.intersection(members).is_subset(holders));
    if covered {
        ViewClass::View3
    } else {
        ViewClass::View2
    }
}

pub fn classify(qs: &QuorumSystem, view: &TagView) -> Result<ViewClass> {
    let members = view.check(qs)?;
    let (_, holders) = view.max_holders(members);
    Ok(classify_members(qs, view.quorum, members, holders))
}

/// Peel off maximum-tag holders until the remaining servers show View1
/// (return their tag) or View3 (wait for acks).
///
/// Intersections are taken against the quorum's remaining members, so an
/// intersection emptied by earlier rounds counts as covered.
pub fn iterative_analyze(qs: &QuorumSystem, view: &TagView) -> Result<IterativeDecision> {
    analyze_rounds(qs, view).map(|(d, _)| d)
}

pub(crate) fn analyze_rounds(
    qs: &QuorumSystem,
    view: &TagView,
) -> Result<(IterativeDecision, usize)> {
    let mut remaining = view.check(qs)?;
    let mut rounds = 0;
    // each View2 round removes at least one server, and a lone server is View1
    while !remaining.is_empty() {
        rounds += 1;
        let (max, holders) = view.max_holders(remaining);
        match classify_members(qs, view.quorum, remaining, holders) {
            ViewClass::View1 => {
                return Ok((IterativeDecision::ReturnTag { tag: max, holders }, rounds))
            }
            ViewClass::View3 => return Ok((IterativeDecision::AwaitAcks, rounds)),
            ViewClass::View2 => remaining = remaining.difference(holders),
        }
    }
    unreachable!("a non-empty remainder always classifies as View1 or View3 before emptying")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // a,b,c,d = servers 0..3 of majority(4); Q = {a,b,c} is quorum 0.
    const A: u32 = 0;
    const B: u32 = 1;
    const C: u32 = 2;

    fn ts(t: u64) -> Tag {
        Tag::new(t, 0)
    }

    /// Independent classifier: enumerate intersections member by member.
    fn brute_classify(qs: &QuorumSystem, view: &TagView) -> ViewClass {
        let q: Vec<u32> = qs.quorum(view.quorum).iter().collect();
        let tag_of = |s: u32| view.tags.iter().find(|(x, _)| *x == s).unwrap().1;
        let max = q.iter().map(|&s| tag_of(s)).max().unwrap();
        if q.iter().all(|&s| tag_of(s) == max) {
            return ViewClass::View1;
        }
        for (i, other) in qs.quorums().iter().enumerate() {
            if i == view.quorum {
                continue;
            }
            let inter: Vec<u32> = q.iter().copied().filter(|&s| other.contains(s)).collect();
            if inter.iter().all(|&s| tag_of(s) == max) {
                return ViewClass::View3;
            }
        }
        ViewClass::View2
    }

    #[test]
    fn classify_examples() {
        let m3 = QuorumSystem::majority(3).unwrap();
        let v = TagView::new(0, [(0, ts(5)), (1, ts(5))]);
        assert_eq!(classify(&m3, &v).unwrap(), ViewClass::View1);

        let m4 = QuorumSystem::majority(4).unwrap();
        assert_eq!(m4.quorum(0), [A, B, C].into_iter().collect());
        let v2 = TagView::new(0, [(A, ts(5)), (B, ts(4)), (C, ts(4))]);
        assert_eq!(classify(&m4, &v2).unwrap(), ViewClass::View2);
        assert_eq!(brute_classify(&m4, &v2), ViewClass::View2);
        let v3 = TagView::new(0, [(A, ts(5)), (B, ts(5)), (C, ts(4))]);
        assert_eq!(classify(&m4, &v3).unwrap(), ViewClass::View3);
        assert_eq!(brute_classify(&m4, &v3), ViewClass::View3);
    }

    #[test]
    fn malformed_views_rejected() {
        let m3 = QuorumSystem::majority(3).unwrap();
        assert!(classify(&m3, &TagView::new(0, [(0, ts(1))])).is_err());
        assert!(classify(&m3, &TagView::new(0, [(0, ts(1)), (2, ts(1))])).is_err());
        assert!(classify(&m3, &TagView::new(7, [(0, ts(1)), (1, ts(1))])).is_err());
        assert!(
            iterative_analyze(&m3, &TagView::new(0, [(0, ts(1)), (1, ts(1)), (1, ts(2))])).is_err()
        );
    }

    #[test]
    fn iterative_examples() {
        let m4 = QuorumSystem::majority(4).unwrap();
        let uniform = TagView::new(
            0,
            [
                (A, Tag::new(5, 2)),
                (B, Tag::new(5, 2)),
                (C, Tag::new(5, 2)),
            ],
        );
        assert!(matches!(
            iterative_analyze(&m4, &uniform).unwrap(),
            IterativeDecision::ReturnTag { tag, .. } if tag == Tag::new(5, 2)
        ));

        let view3 = TagView::new(
            0,
            [
                (A, Tag::new(5, 2)),
                (B, Tag::new(5, 2)),
                (C, Tag::new(4, 1)),
            ],
        );
        assert_eq!(
            iterative_analyze(&m4, &view3).unwrap(),
            IterativeDecision::AwaitAcks
        );

        let peel = TagView::new(
            0,
            [
                (A, Tag::new(5, 2)),
                (B, Tag::new(4, 1)),
                (C, Tag::new(4, 1)),
            ],
        );
        let (decision, rounds) = analyze_rounds(&m4, &peel).unwrap();
        assert_eq!(
            decision,
            IterativeDecision::ReturnTag {
                tag: Tag::new(4, 1),
                holders: [B, C].into_iter().collect()
            }
        );
        assert_eq!(rounds, 2);
        // the first round agrees with the brute-force classifier
        assert_eq!(brute_classify(&m4, &peel), ViewClass::View2);
    }

    fn arb_view() -> impl Strategy<Value = (QuorumSystem, TagView)> {
        let systems = prop_oneof![
            (1usize..7).prop_map(|n| QuorumSystem::majority(n).unwrap()),
            (1usize..5, 1usize..5).prop_map(|(r, c)| QuorumSystem::matrix(r, c).unwrap()),
        ];
        systems
            .prop_flat_map(|qs| {
                let n = qs.len();
                let width = qs.n_servers();
                (
                    Just(qs),
                    0..n,
                    proptest::collection::vec((0u64..4, 0u32..3), width),
                )
            })
            .prop_map(|(qs, q, tags)| {
                let view = TagView::new(
                    q,
                    qs.quorum(q)
                        .iter()
                        .map(|s| (s, Tag::new(tags[s as usize].0, tags[s as usize].1))),
                );
                (qs, view)
            })
    }

    proptest! {
        #[test]
        fn classifier_matches_brute_force((qs, view) in arb_view()) {
            prop_assert_eq!(classify(&qs, &view).unwrap(), brute_classify(&qs, &view));
        }

        #[test]
        fn uniform_tags_are_view1((qs, view) in arb_view()) {
            let flat = TagView::new(view.quorum, view.tags.iter().map(|&(s, _)| (s, Tag::new(3, 1))));
            prop_assert_eq!(classify(&qs, &flat).unwrap(), ViewClass::View1);
        }

        #[test]
        fn lone_maximum_with_wide_intersections_is_view2((qs, view) in arb_view()) {
            let q = qs.quorum(view.quorum);
            let wide = qs.quorums().iter().enumerate()
                .all(|(i, o)| i == view.quorum || o.intersection(q).len() >= 2);
            let (_, holders) = view.max_holders(q);
            if wide && holders.len() == 1 && q.len() > 1 {
                prop_assert_eq!(classify(&qs, &view).unwrap(), ViewClass::View2);
            }
        }

        #[test]
        fn iterative_terminates_within_quorum_size((qs, view) in arb_view()) {
            let (decision, rounds) = analyze_rounds(&qs, &view).unwrap();
            prop_assert!(rounds >= 1 && rounds <= qs.quorum(view.quorum).len());
            if let IterativeDecision::ReturnTag { tag, holders } = decision {
                prop_assert!(!holders.is_empty());
                for s in holders.iter() {
                    prop_assert!(view.tags.contains(&(s, tag)));
                }
            }
        }
    }
}
