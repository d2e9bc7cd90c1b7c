//! Published data of the datacenter social-engineering case study, used as
//! fixture input. Nothing here is synthesized.

pub const GOAL: &str = "Secure the Corporate Datacenter from Social Engineering Attacks";

/// Recorded guide replies.
pub const GUIDE_EXPERTS_REPLY: &str = "In summary, for a decision as critical as securing a corporate datacenter, a group of 5-7 experts from key areas would be a good balance.";
pub const GUIDE_LEVELS_REPLY: &str = "Given the goal of securing a datacenter against social engineering attacks, a two-level structure is often optimal. It allows for sufficient detail and specificity without becoming overly complicated.";

pub struct PersonaProfile {
    pub title: &'static str,
    pub name: &'static str,
    pub background: &'static str,
    pub personality: &'static str,
}

/// The seven expert profiles, in the order the guide listed them.
pub const PERSONAS: [PersonaProfile; 7] = [
    PersonaProfile {
        title: "Cybersecurity Strategist",
        name: "Dr. Ava Chen",
        background: "With a Ph.D. in Cybersecurity and over 15 years of experience in cyber defense strategies, Dr. Chen has a deep understanding of various cybersecurity threats, including social engineering.",
        personality: "Detail-oriented and analytical, she excels in identifying subtle security vulnerabilities and prefers data-driven approaches. Dr. Chen will be instrumental in defining criteria related to technical security measures and evaluating alternatives for effectiveness.",
    },
    PersonaProfile {
        title: "Senior IT Infrastructure Architect",
        name: "Michael Rodriguez",
        background: "Michael specializes in designing secure IT infrastructures. His 20 years in the field give him a thorough understanding of the technical aspects of datacenter operations.",
        personality: "A problem-solver who enjoys exploring innovative solutions, Michael will contribute significantly to identifying and evaluating alternatives that involve technical infrastructure enhancements.",
    },
    PersonaProfile {
        title: "Organizational Psychologist",
        name: "Dr. Yara Singh",
        background: "Dr. Singh's expertise lies in human behavior in the workplace. Her research on social engineering vulnerabilities within corporate environments is widely respected.",
        personality: "Known for her empathetic and intuitive nature, she is adept at understanding human factors in security and will provide invaluable insights into criteria and alternatives related to employee training and awareness programs.",
    },
    PersonaProfile {
        title: "Legal and Compliance Officer",
        name: "Edward Kim",
        background: "Edward has extensive experience in corporate law, with a focus on compliance and data privacy regulations.",
        personality: "As a meticulous and thorough professional, he is well-suited to advise on legal and compliance-related criteria, ensuring that the chosen security measures adhere to legal standards.",
    },
    PersonaProfile {
        title: "Chief Risk Officer",
        name: "Anita Patel",
        background: "Anita has a strong background in risk management and mitigation strategies in large corporations.",
        personality: "Her strategic and forward-thinking approach will be crucial in evaluating the long-term risks and benefits of each alternative, especially in relation to financial and reputational impacts.",
    },
    PersonaProfile {
        title: "Physical Security Expert",
        name: "Lt. Col. John Abrams (Retd.)",
        background: "With a military background and experience in corporate physical security, he understands the importance of securing physical access to sensitive areas.",
        personality: "His practical and no-nonsense approach will ground the discussion in realistic, enforceable physical security measures.",
    },
    PersonaProfile {
        title: "Vendor Management Specialist",
        name: "Laura García",
        background: "Laura specializes in managing relationships with third-party vendors and has a keen understanding of the security risks associated with external entities.",
        personality: "Her collaborative and communicative style is effective in discussions about managing external risks and integrating vendor-related security considerations into the overall strategy.",
    },
];

/// Each expert's seven proposed top-level criteria (49 in total).
pub const INITIAL_CRITERIA: [(&str, [&str; 7]); 7] = [
    (
        "Dr. Ava Chen",
        [
            "Employee Training",
            "Access Control",
            "Communication Protocols",
            "Incident Response",
            "Physical Security",
            "Policy Enforcement",
            "Monitoring Systems",
        ],
    ),
    (
        "Michael Rodriguez",
        [
            "System Redundancies",
            "Database Security",
            "Cloud Infrastructure Security",
            "Hardware Integrity",
            "Software Updates",
            "Server Access Control",
            "Network Segmentation",
        ],
    ),
    (
        "Dr. Yara Singh",
        [
            "Employee Training Programs",
            "Behavior Analysis",
            "Social Engineering Awareness",
            "Psychological Profiling",
            "Insider Threat Monitoring",
            "Communication Protocols",
            "Staff Vigilance",
        ],
    ),
    (
        "Laura García",
        [
            "Vendor Risk Assessment",
            "Third-party Audits",
            "Supply Chain Security",
            "Service Level Agreements",
            "External Collaboration Security",
            "Information Sharing Policies",
            "Outsourcing Management",
        ],
    ),
    (
        "Edward Kim",
        [
            "Regulatory Compliance",
            "Legal Risk Assessment",
            "Policy Development",
            "Contractual Safeguards",
            "Audit Trails",
            "Reporting Mechanisms",
            "Intellectual Property Protection",
        ],
    ),
    (
        "Anita Patel",
        [
            "Risk Management Framework",
            "Business Continuity",
            "Disaster Recovery Planning",
            "Financial Impact Analysis",
            "Strategic Risk Evaluation",
            "Operational Risk Controls",
            "Compliance Risk Management",
        ],
    ),
    (
        "Lt. Col. John Abrams (Retd.)",
        [
            "Physical Access Controls",
            "Surveillance Systems",
            "Security Personnel Training",
            "Entry Point Security",
            "Emergency Response",
            "Visitor Management",
            "Environmental Controls",
        ],
    ),
];

/// Alias pairs implied by the published 49 to 45 reduction. The one exact
/// repeat ("Communication Protocols") needs no alias.
pub const ALIASES: [(&str, &str); 3] = [
    ("Employee Training", "Employee Training Programs"),
    ("Physical Security", "Physical Access Controls"),
    ("Access Control", "Physical Access Controls"),
];

/// Final two-level tree, in published order.
pub const TREE: [(&str, [&str; 3]); 7] = [
    (
        "Social Engineering Awareness",
        [
            "Training Program Effectiveness",
            "Awareness Session Regularity",
            "Incident Reporting Protocol",
        ],
    ),
    (
        "Physical Access Controls",
        [
            "Biometric System Reliability",
            "Visitor Tracking System",
            "Access Point Monitoring",
        ],
    ),
    (
        "Audit Trails",
        [
            "Log Analysis Accuracy",
            "Audit Frequency",
            "Anomaly Tracking Efficiency",
        ],
    ),
    (
        "Behavior Analysis",
        [
            "User Behavior Monitoring",
            "Response to Anomalies",
            "Activity Pattern Analysis",
        ],
    ),
    (
        "Operational Risk Controls",
        [
            "Infrastructure Vulnerability Check",
            "Data Redundancy Systems",
            "Emergency Protocol Effectiveness",
        ],
    ),
    (
        "Psychological Profiling",
        [
            "Staff Behavior Assessment",
            "Risk Behavior Profiling",
            "Continuous Observation",
        ],
    ),
    (
        "Service Level Agreements",
        [
            "Response Time Commitment",
            "Data Privacy Assurance",
            "Breach Penalty Specification",
        ],
    ),
];

/// Final alternatives, named as in the tree listing.
pub const ALTERNATIVES: [&str; 5] = [
    "Cloud-Based Data Backup Solutions",
    "Physical Barrier Reinforcement",
    "Security Personnel Training Update",
    "Comprehensive Employee Training Programs",
    "Advanced Intrusion Detection Systems",
];

/// Aggregated top-level matrix as printed (3 decimals), rows and columns
/// in `TREE` order.
pub const TOP_MATRIX: [[f64; 7]; 7] = [
    [1.000, 1.319, 1.104, 1.483, 1.081, 0.498, 0.369],
    [0.756, 1.000, 1.673, 1.560, 1.029, 0.937, 0.408],
    [0.904, 0.601, 1.000, 1.251, 0.701, 0.756, 0.325],
    [0.674, 0.641, 0.798, 1.000, 0.627, 0.801, 0.503],
    [0.920, 0.966, 1.426, 1.608, 1.000, 0.604, 0.526],
    [2.007, 1.068, 1.319, 1.247, 1.636, 1.000, 0.652],
    [2.712, 2.438, 3.061, 1.990, 1.883, 1.532, 1.000],
];

/// Published top-level priorities, CI, CR and lambda max for `TOP_MATRIX`.
pub const TOP_PRIORITIES: [f64; 7] = [0.120, 0.131, 0.099, 0.096, 0.126, 0.164, 0.264];
pub const TOP_CI: f64 = 0.022;
pub const TOP_CR: f64 = 0.016;
pub const TOP_LAMBDA: f64 = 7.13;

/// One expert's sub-criteria matrix for "Social Engineering Awareness".
pub const EXPERT_SUB_MATRIX_OWNER: &str = "Dr. Ava Chen";
pub const EXPERT_SUB_MATRIX: [[f64; 3]; 3] =
    [[1.0, 2.0, 3.0], [0.5, 1.0, 2.0], [1.0 / 3.0, 0.5, 1.0]];

/// Published global priorities of the 21 leaves, in `TREE` order.
pub const LEAF_GLOBALS: [f64; 21] = [
    0.0485, 0.0347, 0.0368, // Social Engineering Awareness
    0.0502, 0.0434, 0.0375, // Physical Access Controls
    0.0317, 0.0385, 0.0288, // Audit Trails
    0.0378, 0.0340, 0.0242, // Behavior Analysis
    0.0573, 0.0384, 0.0302, // Operational Risk Controls
    0.0655, 0.0546, 0.0440, // Psychological Profiling
    0.1127, 0.0866, 0.0644, // Service Level Agreements
];

/// Published final scores, in `ALTERNATIVES` order.
pub const FINAL_SCORES: [f64; 5] = [0.1938, 0.1254, 0.1795, 0.2774, 0.2240];

/// Published ranking, best first.
pub const RANKING: [&str; 5] = [
    "Comprehensive Employee Training Programs",
    "Advanced Intrusion Detection Systems",
    "Cloud-Based Data Backup Solutions",
    "Security Personnel Training Update",
    "Physical Barrier Reinforcement",
];

/// Blended price per 1k tokens and the per-expert token count used in the
/// published cost estimate.
pub const PRICE_PER_1K: f64 = 0.10;
pub const TOKENS_PER_EXPERT: u32 = 4350;

pub fn tree_labels() -> Vec<(String, Vec<String>)> {
    TREE.iter()
        .map(|(p, kids)| (p.to_string(), kids.iter().map(|k| k.to_string()).collect()))
        .collect()
}

pub fn top_labels() -> Vec<String> {
    TREE.iter().map(|(p, _)| p.to_string()).collect()
}

pub fn alternative_labels() -> Vec<String> {
    ALTERNATIVES.iter().map(|a| a.to_string()).collect()
}
