//! Small hand-checkable corpora.

use crate::corpus::{ingest, Corpus};

/// Four posts by three users over four tags. Q posts #1 {building, nature}
/// (15 views) and #2 {outdoor, nature} (30); R posts #3 {building} (5);
/// S posts #4 {animal} (15).
pub const TOY_TSV: &str = "post_id\tuser_id\tviews\ttags
1\tQ\t15\tbuilding,nature
2\tQ\t30\toutdoor,nature
3\tR\t5\tbuilding
4\tS\t15\tanimal
";

/// Six posts where `hot` appears on exactly the three high-view posts.
pub const SIX_POST_TSV: &str = "h1\tu1\t10000\thot,a
h2\tu2\t12000\thot,b
h3\tu3\t9000\thot,a,b
l1\tu4\t3\ta,low1
l2\tu5\t5\tb,low2
l3\tu6\t2\tlow1,low2
";

/// Two components: {a, b} and {x, y}, never sharing a post or a user.
pub const TWO_COMPONENT_TSV: &str = "p1\tu1\t10\ta,b
p2\tu1\t4\ta
p3\tu2\t7\tb
p4\tu3\t20\tx,y
p5\tu4\t3\ty
";

pub fn toy_corpus() -> Corpus {
    ingest(TOY_TSV.as_bytes()).expect("toy fixture").corpus
}

pub fn six_post_corpus() -> Corpus {
    ingest(SIX_POST_TSV.as_bytes()).expect("six-post fixture").corpus
}

pub fn two_component_corpus() -> Corpus {
    ingest(TWO_COMPONENT_TSV.as_bytes()).expect("two-component fixture").corpus
}
