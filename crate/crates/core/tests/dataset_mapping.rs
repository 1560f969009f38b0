//! The bundled column mapping loads CICFlowMeter-shaped CSVs unmodified.

use secflow::dataset::{load_flow_csv, CsvSchema};
use secflow::label::ClassLabel;
use std::path::PathBuf;

fn workspace_path(rel: &str) -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.join(rel)
}

#[test]
fn bundled_insdn_schema_loads_a_cicflowmeter_style_csv() {
    let schema = CsvSchema::from_file(&workspace_path("configs/insdn.schema.json")).unwrap();
    assert_eq!(schema.columns.len(), 16);
    assert_eq!(schema.label_column, "Label");

    // A miniature file with the mapped column names (plus extra columns the
    // mapping ignores), including a non-finite rate cell and a blank cell.
    let header = "Flow ID,Src IP,Dst Port,Protocol,Flow Duration,Tot Fwd Pkts,Tot Bwd Pkts,\
TotLen Fwd Pkts,Flow Byts/s,Flow Pkts/s,Flow IAT Mean,Flow IAT Std,Pkt Len Min,Pkt Len Max,\
Pkt Len Mean,Pkt Size Avg,SYN Flag Cnt,RST Flag Cnt,ACK Flag Cnt,Label";
    let rows = [
        "a,10.0.0.1,80,6,2000000,10,8,1200,600.0,9.0,125000,1000,40,1400,300,310,1,0,9,Normal",
        "b,10.0.0.2,80,6,1000000,400,2,64000,Infinity,402.0,2500,90,60,60,60,60,200,0,2,DDoS",
        "c,10.0.0.3,53,17,500000,4,4,320,,16.0,60000,50,80,80,80,80,0,0,0,Probe",
        "d,10.0.0.4,22,6,3000000,50,40,9000,3000.0,30.0,33000,700,40,900,180,200,3,1,80,BFA",
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("insdn-mini.csv");
    std::fs::write(&path, format!("{header}\n{}\n", rows.join("\n"))).unwrap();

    let ds = load_flow_csv(&path, &schema).unwrap();
    assert_eq!(ds.len(), 4);
    assert_eq!(ds.schema[0], "flow_duration_s");
    // Microseconds scaled to seconds.
    assert!((ds.rows[0][0] - 2.0).abs() < 1e-9);
    assert!((ds.rows[0][6] - 0.125).abs() < 1e-9);
    // Non-finite and blank byte rates imputed with the column mean of the
    // parseable cells (600 and 3000).
    assert!((ds.rows[1][4] - 1800.0).abs() < 1e-9);
    assert!((ds.rows[2][4] - 1800.0).abs() < 1e-9);
    assert_eq!(
        ds.labels,
        vec![
            ClassLabel::Normal,
            ClassLabel::DDoS,
            ClassLabel::Probe,
            ClassLabel::BruteForce
        ]
    );
}

#[test]
fn bundled_scenarios_parse_and_validate() {
    for name in [
        "configs/scenarios/ddos.json",
        "configs/scenarios/benign.json",
    ] {
        let scenario = secflow::netsim::ScenarioConfig::from_file(&workspace_path(name)).unwrap();
        scenario.validate().unwrap();
    }
}
