use crate::model::Ticks;

/// Periods and deadlines of the mutual-suspicion protocol, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackboneTimeouts {
    pub mia_send: Ticks,
    pub taia_recv: Ticks,
    pub mia_recv: Ticks,
    pub taia_send: Ticks,
    pub teif: Ticks,
    pub ia_clear: Ticks,
    pub ia_set: Ticks,
}

impl Default for BackboneTimeouts {
    fn default() -> Self {
        BackboneTimeouts {
            mia_send: 800_000,
            taia_recv: 1_500_000,
            mia_recv: 1_500_000,
            taia_send: 1_000_000,
            teif: 1_800_000,
            ia_clear: 900_000,
            ia_set: 1_400_000,
        }
    }
}

impl BackboneTimeouts {
    /// Checks the ordering constraints between paired timeouts.
    pub fn validate(&self) -> Result<(), String> {
        if self.taia_recv <= self.taia_send {
            return Err(format!("TAIA_RECV_TIMEOUT ({}) must exceed TAIA_SEND_TIMEOUT ({})", self.taia_recv, self.taia_send));
        }
        if self.mia_recv <= self.mia_send {
            return Err(format!("MIA_RECV_TIMEOUT ({}) must exceed MIA_SEND_TIMEOUT ({})", self.mia_recv, self.mia_send));
        }
        if self.ia_set <= self.ia_clear {
            return Err(format!("I'M_ALIVE_SET_TIMEOUT ({}) must exceed I'M_ALIVE_CLEAR_TIMEOUT ({})", self.ia_set, self.ia_clear));
        }
        if [self.mia_send, self.taia_send, self.teif, self.ia_clear].contains(&0) {
            return Err("timeouts must be positive".into());
        }
        Ok(())
    }
}
