//! Small hand-built workflows and populations with known outcomes, used by tests, the
//! acceptance suite and the `replay` command.

use crate::population::Population;
use crate::workflow::{ParameterSet, StageInstance, StageTemplate, TaskTemplate, WorkflowStage, WorkflowTemplate};

fn task(id: &str, arg: &str) -> TaskTemplate {
    TaskTemplate {
        id: id.to_string(),
        call: id.to_string(),
        lib: "fixture".to_string(),
        args: vec![arg.to_string()],
        intertask_in: Vec::new(),
        intertask_out: Vec::new(),
    }
}

/// Diamond A -> {B, C} -> D, each stage two tasks with one parameter apiece, and three
/// parameter sets: the second reuses A and B of the first, the third reuses A, B and C of
/// the second.
pub fn diamond() -> (WorkflowTemplate, Vec<ParameterSet>) {
    let stage = |name: &str| {
        let lower = name.to_lowercase();
        WorkflowStage {
            id: name.to_string(),
            template: StageTemplate {
                name: name.to_string(),
                inputs_rt: Vec::new(),
                tasks: vec![
                    task(&format!("{lower}1"), &format!("{lower}1")),
                    task(&format!("{lower}2"), &format!("{lower}2")),
                ],
            },
        }
    };
    let edge = |a: &str, b: &str| (a.to_string(), b.to_string());
    let workflow = WorkflowTemplate::new(
        "diamond",
        vec![stage("A"), stage("B"), stage("C"), stage("D")],
        vec![edge("A", "B"), edge("A", "C"), edge("B", "D"), edge("C", "D")],
        Vec::new(),
    )
    .expect("fixture workflow is valid");
    let set = |v: [&str; 8]| {
        ParameterSet::from([
            ("a1", v[0]),
            ("a2", v[1]),
            ("b1", v[2]),
            ("b2", v[3]),
            ("c1", v[4]),
            ("c2", v[5]),
            ("d1", v[6]),
            ("d2", v[7]),
        ])
    };
    let sets = vec![
        set(["1", "5", "3", "8", "9", "2", "12", "14"]),
        set(["1", "5", "3", "8", "10", "2", "13", "14"]),
        set(["1", "5", "3", "8", "10", "2", "13", "15"]),
    ];
    (workflow, sets)
}

fn pop(rows: &[(&str, &[&str])]) -> Population {
    Population::from_keys(rows).expect("fixture population is valid")
}

/// Five 6-task instances: `c` shares nothing, `a` shares its first task with `b`, `d`, `e`,
/// `b` shares two tasks with `d` and `e`, and `d`, `e` share five.
pub fn shared_prefixes() -> Population {
    pop(&[
        ("a", &["x1", "a2", "a3", "a4", "a5", "a6"]),
        ("b", &["x1", "x2", "b3", "b4", "b5", "b6"]),
        ("c", &["c1", "c2", "c3", "c4", "c5", "c6"]),
        ("d", &["x1", "x2", "x3", "x4", "x5", "d6"]),
        ("e", &["x1", "x2", "x3", "x4", "x5", "e6"]),
    ])
}

/// Stages a-d over tasks driven by p1, p2, p3, followed by the inserted stage x (8, 3, 1).
pub fn insertion() -> Vec<StageInstance> {
    let s = |label: &str, p: [&str; 3]| {
        let keys = [format!("p1={}", p[0]), format!("p2={}", p[1]), format!("p3={}", p[2])];
        let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
        StageInstance::synthetic("s", label, &keys)
    };
    vec![
        s("a", ["1", "2", "4"]),
        s("b", ["1", "2", "5"]),
        s("c", ["1", "3", "6"]),
        s("d", ["8", "4", "7"]),
        s("x", ["8", "3", "1"]),
    ]
}

/// Twelve 3-task stages: 1-5-{a,b,c}, 2-6-{d,e,f,g}, 2-7-{h,i}, 3-8-j, 3-9-k, 4-10-l.
pub fn twelve_stages() -> Population {
    pop(&[
        ("a", &["1", "5", "a"]),
        ("b", &["1", "5", "b"]),
        ("c", &["1", "5", "c"]),
        ("d", &["2", "6", "d"]),
        ("e", &["2", "6", "e"]),
        ("f", &["2", "6", "f"]),
        ("g", &["2", "6", "g"]),
        ("h", &["2", "7", "h"]),
        ("i", &["2", "7", "i"]),
        ("j", &["3", "8", "j"]),
        ("k", &["3", "9", "k"]),
        ("l", &["4", "10", "l"]),
    ])
}

/// Root children 1 and 2; node 1 holds more stages and splits into 4 and 5.
pub fn frontier() -> Population {
    pop(&[
        ("a", &["1", "4", "a"]),
        ("b", &["1", "4", "b"]),
        ("c", &["1", "5", "c"]),
        ("d", &["1", "5", "d"]),
        ("e", &["2", "3", "e"]),
    ])
}

/// Root children 1 and 2; node 1 splits into three, overshooting three buckets.
pub fn overshoot() -> Population {
    pop(&[
        ("a", &["1", "3", "a"]),
        ("b", &["1", "4", "b"]),
        ("c", &["1", "5", "c"]),
        ("d", &["1", "5", "d"]),
        ("e", &["2", "6", "e"]),
    ])
}

/// Three buckets with costs 8, 9 and 5. The 9-cost bucket is X-6-{S4..S7}, X-7-{S8,S9}.
pub fn unbalanced_triple() -> (Population, Vec<Vec<usize>>) {
    let p = pop(&[
        ("S1", &["P", "Q", "S1"]),
        ("S2", &["P", "R", "S2"]),
        ("S3", &["T", "U", "S3"]),
        ("S4", &["X", "6", "S4"]),
        ("S5", &["X", "6", "S5"]),
        ("S6", &["X", "6", "S6"]),
        ("S7", &["X", "6", "S7"]),
        ("S8", &["X", "7", "S8"]),
        ("S9", &["X", "7", "S9"]),
        ("S10", &["Y", "Z", "S10"]),
        ("S11", &["Y", "W", "S11"]),
    ]);
    (p, vec![vec![0, 1, 2], vec![3, 4, 5, 6, 7, 8], vec![9, 10]])
}

/// Buckets b1 (cost 6), b2 and b3 (cost 3 each); only b2 shares a task with b1.
pub fn greedy_pairing() -> (Population, Vec<Vec<usize>>) {
    let p = pop(&[
        ("S1", &["X", "Y", "S1"]),
        ("S2", &["X", "Y", "S2"]),
        ("S3", &["X", "Z", "S3"]),
        ("S4", &["X", "W", "S4"]),
        ("S5", &["P", "Q", "S5"]),
    ]);
    (p, vec![vec![0, 1, 2], vec![3], vec![4]])
}

/// Buckets b1 (cost 6) sharing X-Y with b2 (cost 8), and a disjoint b3 (cost 5).
pub fn false_improvement() -> (Population, Vec<Vec<usize>>) {
    let p = pop(&[
        ("S1", &["X", "Y", "S1"]),
        ("S2", &["P", "Q", "S2"]),
        ("S6", &["X", "Y", "S6"]),
        ("S7", &["X", "Y", "S7"]),
        ("S8", &["X", "Y", "S8"]),
        ("S9", &["X'", "Y'", "S9"]),
        ("S10", &["U", "V", "S10"]),
        ("S11", &["U", "V'", "S11"]),
    ]);
    (p, vec![vec![0, 1], vec![2, 3, 4, 5], vec![6, 7]])
}

/// Depth-3 tree with interchangeable siblings: 1-{4,5,6}, 2-{7,8}, 3-{9,10,11}, leaves 12-22.
pub fn interchangeable_siblings() -> Population {
    pop(&[
        ("12", &["1", "4", "12"]),
        ("13", &["1", "5", "13"]),
        ("14", &["1", "6", "14"]),
        ("15", &["2", "7", "15"]),
        ("16", &["2", "7", "16"]),
        ("17", &["2", "8", "17"]),
        ("18", &["2", "8", "18"]),
        ("19", &["3", "9", "19"]),
        ("20", &["3", "9", "20"]),
        ("21", &["3", "10", "21"]),
        ("22", &["3", "11", "22"]),
    ])
}

/// `n` instances of `k` tasks with no task in common.
pub fn disjoint_population(n: usize, k: usize) -> Population {
    let keys: Vec<Vec<String>> = (0..n).map(|i| (0..k).map(|d| format!("{i}.{d}")).collect()).collect();
    let instances = keys
        .iter()
        .enumerate()
        .map(|(i, ks)| {
            let ks: Vec<&str> = ks.iter().map(String::as_str).collect();
            StageInstance::synthetic("s", &i.to_string(), &ks)
        })
        .collect();
    Population::new(instances).expect("uniform synthetic instances")
}

/// The segmentation stage alone, as a one-stage workflow.
pub fn segmentation_only() -> WorkflowTemplate {
    let template = StageTemplate::parse(crate::reference::SEGMENTATION).expect("bundled descriptor is valid");
    let stage = WorkflowStage {
        id: "segmentation".to_string(),
        template,
    };
    WorkflowTemplate::new("segmentation-only", vec![stage], Vec::new(), Vec::new()).expect("one-stage workflow")
}

/// Two groups of segmentation sets with the same number of unique tasks but different task
/// mixes: three sets that part ways only at the last task, and two that part at the sixth.
pub fn mixed_depth_pair() -> (WorkflowTemplate, Vec<ParameterSet>, Vec<ParameterSet>) {
    let workflow = segmentation_only();
    let space = crate::reference::space().expect("bundled space is valid");
    let base = || {
        let mut set = ParameterSet::default();
        for spec in &space.params {
            set.insert(&spec.name, spec.value_at(0));
        }
        set
    };
    let tasks = &workflow.stages[0].template.tasks;
    let vary = |task: usize, level: usize| {
        let name = &tasks[task].args[0];
        let mut set = base();
        set.insert(name, space.get(name).expect("mapped parameter").value_at(level));
        set
    };
    let first = (0..3).map(|l| vary(6, l)).collect();
    let second = (0..2).map(|l| vary(5, l)).collect();
    (workflow, first, second)
}
