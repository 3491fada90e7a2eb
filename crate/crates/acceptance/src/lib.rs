//! Holds the `acceptance` test target; run with `cargo test -p lqgame-acceptance`.
