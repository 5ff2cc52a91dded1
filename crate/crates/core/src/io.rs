//! Map and scenario files.
//!
//! A scenario holds one agent per line: `t_s x_s y_s x_g y_g` in grid
//! coordinates. Blank lines and lines starting with `#` are skipped; agent
//! ids follow line order.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use crate::error::{Error, Result};
use crate::graph::{Graph, GridMap};
use crate::model::Agent;
use crate::sim::OnlineInstance;

pub fn read_text(path: &FsPath) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &FsPath, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_map(path: &FsPath) -> Result<GridMap> {
    GridMap::parse(&read_text(path)?, &path.display().to_string())
}

pub fn parse_scenario(text: &str, file: &str, graph: &Graph) -> Result<Vec<Agent>> {
    let mut agents = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(file, lineno, format!("expected 5 fields, found {}", fields.len())));
        }
        let mut nums = [0u32; 5];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| Error::parse(file, lineno, format!("'{f}' is not a non-negative integer")))?;
        }
        let [ts, xs, ys, xg, yg] = nums;
        let cell = |x: u32, y: u32, what: &str| {
            graph
                .vertex_at(x, y)
                .ok_or_else(|| Error::parse(file, lineno, format!("{what} ({x},{y}) is blocked or off the map")))
        };
        let start = cell(xs, ys, "start")?;
        let goal = cell(xg, yg, "goal")?;
        if start == goal {
            return Err(Error::parse(file, lineno, "start and goal coincide"));
        }
        agents.push(Agent::new(agents.len() as u32, ts, start, goal));
    }
    Ok(agents)
}

pub fn scenario_text(agents: &[Agent], graph: &Graph) -> String {
    let mut out = String::new();
    for a in agents {
        let (xs, ys) = graph.coords(a.start).expect("grid vertex");
        let (xg, yg) = graph.coords(a.goal).expect("grid vertex");
        let _ = writeln!(out, "{} {xs} {ys} {xg} {yg}", a.start_time);
    }
    out
}

/// Map plus scenario as an online instance named after the scenario file.
pub fn load_instance(map: &FsPath, scen: &FsPath) -> Result<OnlineInstance> {
    let graph = load_map(map)?.to_graph();
    let agents = parse_scenario(&read_text(scen)?, &scen.display().to_string(), &graph)?;
    let id = scen.file_stem().map_or_else(|| scen.display().to_string(), |s| s.to_string_lossy().into_owned());
    OnlineInstance::new(id, graph, agents)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Graph {
        GridMap::from_rows(&["...", ".@.", "..."]).unwrap().to_graph()
    }

    #[test]
    fn round_trip() {
        let g = grid();
        let text = "# two agents\n0 0 0 2 2\n\n3 2 0 0 2\n";
        let agents = parse_scenario(text, "s.scen", &g).unwrap();
        assert_eq!(agents.len(), 2);
        assert_eq!(agents[1].start_time, 3);
        assert_eq!(scenario_text(&agents, &g), "0 0 0 2 2\n3 2 0 0 2\n");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let g = grid();
        let e = parse_scenario("0 0 0 2 2\n1 1 1 2 2\n", "s.scen", &g).unwrap_err();
        assert_eq!(e.to_string(), "s.scen:2: start (1,1) is blocked or off the map");
        let e = parse_scenario("0 0 0 2\n", "s.scen", &g).unwrap_err();
        assert!(e.to_string().starts_with("s.scen:1: expected 5 fields"));
        let e = parse_scenario("x 0 0 2 2\n", "s.scen", &g).unwrap_err();
        assert!(e.to_string().contains("'x'"));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let map = dir.path().join("m.map");
        let scen = dir.path().join("sub/one.scen");
        write_text(&map, &GridMap::from_rows(&["...."]).unwrap().to_text()).unwrap();
        write_text(&scen, "0 0 0 3 0\n").unwrap();
        let inst = load_instance(&map, &scen).unwrap();
        assert_eq!(inst.id, "one");
        assert_eq!(inst.agents.len(), 1);
        assert!(load_map(&dir.path().join("missing.map")).is_err());
    }
}
