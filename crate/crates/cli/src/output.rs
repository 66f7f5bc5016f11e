//! Outputs are staged in memory and written only once every artifact of a
//! command has been produced.

use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Default)]
pub struct Staged(Vec<(String, Vec<u8>)>);

impl Staged {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.0.push((name.to_string(), bytes));
    }

    pub fn add_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> qshape::Result<()>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf).with_context(|| format!("rendering {name}"))?;
        self.add(name, buf);
        Ok(())
    }

    pub fn add_pairs(&mut self, name: &str, pairs: &[(String, String)]) -> Result<()> {
        self.add_with(name, |buf| qshape::kv::write(buf, pairs))
    }

    pub fn commit(self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in self.0 {
            let path = dir.join(&name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}
