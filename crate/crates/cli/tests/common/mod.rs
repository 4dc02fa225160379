#![allow(dead_code)]

use std::fs;
use std::path::Path;

use causal_tree_core::{serialize_forest, CausalForest, Entity, Modifier, Node, SerializeOptions};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const TERMS: &[&str] = &[
    "急性心筋梗塞",
    "胸痛",
    "完全閉塞",
    "冠動脈",
    "僧帽弁逆流",
    "心エコー",
    "SpO2",
    "低値",
    "泡沫状",
    "痰",
    "MRI",
    "DWI高信号",
    "右",
    "左",
    "大脳半球",
    "ステロイド",
    "有効",
    "無効",
    "肝硬変",
    "腹水",
    "CRP",
    "高値",
    "発熱",
    "咳嗽",
    "肺炎",
    "胸部CT",
    "すりガラス影",
    "下葉",
    "白血球",
    "貧血",
    "黄疸",
    "腹部エコー",
    "脾腫",
    "蛋白尿",
    "腎生検",
    "糸球体腎炎",
    "浮腫",
    "両側",
    "下腿",
    "心不全",
    "BNP",
    "呼吸困難",
];

pub const POLARITY: &[&str] = &["低値", "高値", "有効", "無効", "陽性", "陰性"];

pub fn write_dir(dir: &Path, cases: &[(String, String)]) {
    fs::create_dir_all(dir).unwrap();
    for (id, text) in cases {
        fs::write(dir.join(format!("{id}.tree")), format!("{text}\n")).unwrap();
    }
}

pub fn entity(rng: &mut StdRng) -> Entity {
    Entity::new(*TERMS.choose(rng).unwrap()).unwrap()
}

/// A node line with up to `max_mods` modifiers in canonical order.
pub fn random_line(rng: &mut StdRng, max_mods: usize) -> Node {
    let mut node = Node::new(entity(rng)).with_history(rng.gen_bool(0.15));
    let budget = rng.gen_range(0..=max_mods);
    if budget > 0 && rng.gen_bool(0.3) {
        let mut m = Modifier::tested(entity(rng));
        if rng.gen_bool(0.2) {
            m = m.with_features([entity(rng)]);
        }
        node.modifiers.push(m);
    }
    if node.modifiers.len() < budget && rng.gen_bool(0.3) {
        node.modifiers.push(Modifier::featured(entity(rng)));
    }
    while node.modifiers.len() < budget {
        let m = if rng.gen_bool(0.5) {
            let mut m = Modifier::located(entity(rng));
            if rng.gen_bool(0.3) {
                let n = rng.gen_range(1..=2);
                let features: Vec<Entity> = (0..n).map(|_| entity(rng)).collect();
                m = m.with_features(features);
            }
            m
        } else {
            Modifier::polarity(Entity::new(*POLARITY.choose(rng).unwrap()).unwrap())
        };
        node.modifiers.push(m);
    }
    node
}

fn random_subtree(
    rng: &mut StdRng,
    depth: usize,
    max_depth: usize,
    fanout: usize,
    max_mods: usize,
    budget: &mut usize,
) -> Node {
    let mut node = random_line(rng, max_mods);
    *budget = budget.saturating_sub(1);
    if depth < max_depth {
        let n = rng.gen_range(0..=fanout);
        for _ in 0..n {
            if *budget == 0 {
                break;
            }
            node.children.push(random_subtree(
                rng,
                depth + 1,
                max_depth,
                fanout,
                max_mods,
                budget,
            ));
        }
    }
    node
}

/// Random valid forest with depth <= `max_depth`, fan-out <= `fanout` and at
/// most `max_nodes` nodes.
pub fn random_forest(
    rng: &mut StdRng,
    max_depth: usize,
    fanout: usize,
    max_mods: usize,
    max_nodes: usize,
) -> CausalForest {
    let mut budget = max_nodes;
    let roots = rng.gen_range(1..=3);
    let mut nodes = Vec::new();
    for _ in 0..roots {
        if budget == 0 {
            break;
        }
        nodes.push(random_subtree(
            rng,
            1,
            max_depth,
            fanout,
            max_mods,
            &mut budget,
        ));
    }
    CausalForest::new("", nodes).unwrap()
}

pub fn text(forest: &CausalForest) -> String {
    serialize_forest(forest, &SerializeOptions::default())
}

/// A prediction derived from `gold`: some heads renamed, some fuzzed with an
/// inserted character, some subtrees dropped.
pub fn perturb(rng: &mut StdRng, gold: &CausalForest) -> CausalForest {
    fn walk(rng: &mut StdRng, node: &Node) -> Node {
        let mut out = node.clone();
        let roll: f64 = rng.gen();
        if roll < 0.15 {
            out.head = entity(rng);
        } else if roll < 0.3 {
            out.head = Entity::new(format!("{}の", node.head)).unwrap();
        }
        out.children = Vec::new();
        for child in &node.children {
            if rng.gen_bool(0.85) {
                out.children.push(walk(rng, child));
            }
        }
        out
    }
    let roots = gold.roots.iter().map(|r| walk(rng, r)).collect();
    CausalForest::new("", roots).unwrap()
}

/// Gold/pred trees with about `triplets` gold triplets.
pub fn synthetic_case(rng: &mut StdRng, triplets: usize) -> (String, String) {
    loop {
        let gold = random_forest(rng, 5, 4, 2, triplets / 2 + 2);
        let n = causal_tree_core::decompose(&gold).len();
        if n + 6 >= triplets && n <= triplets + 6 {
            let pred = perturb(rng, &gold);
            return (text(&gold), text(&pred));
        }
    }
}

/// Cases where the manual score tracks only depth-1 errors while the number
/// of depth-3 errors varies independently; returns (id, gold, pred, manual).
pub fn shallow_preference_corpus() -> Vec<(String, String, String, f64)> {
    let mut out = Vec::new();
    for i in 0..24 {
        let shallow_errors = i % 3;
        let deep_errors = (i * 7) % 13;
        let mut gold = String::from("疾患\n");
        let mut pred = String::from("疾患\n");
        let mut leaf = 0;
        for a in 0..2 {
            gold.push_str(&format!("  所見{a}\n"));
            let name = if a < shallow_errors {
                format!("誤{a}")
            } else {
                format!("所見{a}")
            };
            pred.push_str(&format!("  {name}\n"));
            for b in 0..3 {
                gold.push_str(&format!("    検査{a}{b}\n"));
                pred.push_str(&format!("    検査{a}{b}\n"));
                for c in 0..2 {
                    gold.push_str(&format!("      葉{a}{b}{c}\n"));
                    let leaf_name = if leaf < deep_errors {
                        "誤差違い".to_string()
                    } else {
                        format!("葉{a}{b}{c}")
                    };
                    pred.push_str(&format!("      {leaf_name}\n"));
                    leaf += 1;
                }
            }
        }
        let manual = 100.0 - 40.0 * shallow_errors as f64;
        out.push((format!("s{i:02}"), gold, pred, manual));
    }
    out
}
