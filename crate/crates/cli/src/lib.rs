//! Library surface of the `aeds` command-line tool: problem-file parsing,
//! command dispatch and the bundled example corpus. The binary in
//! `main.rs` is a thin wrapper, so integration tests can drive everything
//! in-process.

pub mod config;
pub mod runner;

pub use config::{ConfigError, ProblemFile};
pub use runner::{run_file, run_problem, CliError, CommandKind, Overrides, RunReport};

/// One bundled problem file with the command its verdict is documented
/// for.
pub struct BundledExample {
    pub name: &'static str,
    pub description: &'static str,
    pub command: CommandKind,
    /// Extra flags of the designated invocation.
    pub max_degree: Option<u32>,
    /// Exit code of the designated invocation.
    pub expected_exit: i32,
    pub content: &'static str,
}

/// The bundled corpus, in presentation order.
pub fn bundled_examples() -> &'static [BundledExample] {
    &[
        BundledExample {
            name: "semilinear",
            description: "first-order semilinear transport PDE as a one-form ideal; exact characteristics solution",
            command: CommandKind::IntegralCheck,
            max_degree: None,
            expected_exit: 0,
            content: include_str!("../problems/semilinear.toml"),
        },
        BundledExample {
            name: "radial-atiyah",
            description: "rotation-quotient algebroid of the planar radial system; reduced flow as an integral manifold",
            command: CommandKind::IntegralCheck,
            max_degree: None,
            expected_exit: 0,
            content: include_str!("../problems/radial-atiyah.toml"),
        },
        BundledExample {
            name: "radial-manifold",
            description: "the same radial system on the plane, with the reconstructed spiral solution",
            command: CommandKind::IntegralCheck,
            max_degree: None,
            expected_exit: 0,
            content: include_str!("../problems/radial-manifold.toml"),
        },
        BundledExample {
            name: "r1_canonical",
            description: "one-dimensional group, canonical connection; multiplier k11 = 1 + w1^2",
            command: CommandKind::Helmholtz,
            max_degree: None,
            expected_exit: 0,
            content: include_str!("../problems/r1_canonical.toml"),
        },
        BundledExample {
            name: "heisenberg",
            description: "Heisenberg algebra, canonical connection; every constant multiplier is singular",
            command: CommandKind::Solve,
            max_degree: Some(0),
            expected_exit: 1,
            content: include_str!("../problems/heisenberg.toml"),
        },
        BundledExample {
            name: "so3_canonical",
            description: "so(3), canonical connection; derived-field and bracket-table report",
            command: CommandKind::IpReport,
            max_degree: None,
            expected_exit: 0,
            content: include_str!("../problems/so3_canonical.toml"),
        },
    ]
}

/// Text listing of the corpus: one `name: description` line each.
pub fn list_examples() -> String {
    let examples = bundled_examples();
    let width = examples.iter().map(|e| e.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for e in examples {
        let extra = match e.max_degree {
            Some(d) => format!(" --max-degree {d}"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{:<width$}  {}  [aeds {}{extra} problems/{}.toml]\n",
            e.name,
            e.description,
            e.command.name(),
            e.name,
        ));
    }
    out
}
