//! Building trees and kernels from JSON documents and shorthands, as the
//! command line does.

use serde_json::json;
use treechain::classify::{classify_recurrence, RecurrenceConfig};
use treechain::io::{build_kernel, build_tree, kernel_shorthand, tree_shorthand};

fn main() -> treechain::Result<()> {
    let tree = build_tree(&tree_shorthand("complete:2").expect("shorthand"))?;
    let doc = kernel_shorthand("walk:up=1/3,child=1/3").expect("shorthand");
    let k = build_kernel::<f64>(&doc, Some(&tree))?;
    println!("{doc} -> {}", k.name());
    println!("{:?}", classify_recurrence(&k, &RecurrenceConfig::default()).outcome);

    let star = build_tree(&json!({"type": "finite", "children": [3, 0, 0, 0]}))?;
    let rows = json!({"family": "explicit", "rows": [
        ["1/20", "1/4", "1/5", "1/2"], ["1/3", "2/3", 0, 0], ["1/3", 0, "2/3", 0], ["1/3", 0, 0, "2/3"]
    ]});
    let k = build_kernel::<treechain::Q>(&rows, Some(&star))?;
    println!("explicit kernel on {} nodes", k.tree().as_finite().map_or(0, |t| t.len()));
    Ok(())
}
