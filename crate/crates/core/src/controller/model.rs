use super::MapError;

/// Bit-field mapping from physical addresses to memory controllers and L2
/// banks.
///
/// The default reproduces a four-controller part where bits 8 and 7 pick the
/// controller and bit 6 the bank, so consecutive 64-byte lines rotate through
/// banks and controllers and the mapping repeats every 512 bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressMapModel {
    controller_bits: Vec<u32>,
    bank_bit: u32,
    line_size: u64,
}

impl Default for AddressMapModel {
    fn default() -> Self {
        Self {
            controller_bits: vec![8, 7],
            bank_bit: 6,
            line_size: 64,
        }
    }
}

impl AddressMapModel {
    /// `controller_bits` lists the selecting bits from most to least
    /// significant.
    pub fn new(controller_bits: Vec<u32>, bank_bit: u32, line_size: u64) -> Result<Self, MapError> {
        if controller_bits.is_empty() || controller_bits.len() > 16 {
            return Err(MapError::InvalidModel(format!(
                "need between 1 and 16 controller bits, got {}",
                controller_bits.len()
            )));
        }
        let mut all = controller_bits.clone();
        all.push(bank_bit);
        if let Some(&b) = all.iter().find(|&&b| b >= 64) {
            return Err(MapError::InvalidModel(format!("bit index {b} out of range")));
        }
        let mut sorted = all.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != all.len() {
            return Err(MapError::InvalidModel(format!(
                "bit indices must be distinct: {all:?}"
            )));
        }
        if !line_size.is_power_of_two() {
            return Err(MapError::InvalidModel(format!(
                "line size {line_size} is not a power of two"
            )));
        }
        if line_size.trailing_zeros() > sorted[0] {
            return Err(MapError::InvalidModel(format!(
                "a {line_size}-byte line would straddle the mapping bit {}",
                sorted[0]
            )));
        }
        Ok(Self {
            controller_bits,
            bank_bit,
            line_size,
        })
    }

    pub fn controller_bits(&self) -> &[u32] {
        &self.controller_bits
    }

    pub fn bank_bit(&self) -> u32 {
        self.bank_bit
    }

    pub fn line_size(&self) -> u64 {
        self.line_size
    }

    pub fn controller_count(&self) -> usize {
        1 << self.controller_bits.len()
    }

    pub fn controller_of(&self, address: u64) -> usize {
        self.controller_bits
            .iter()
            .fold(0, |acc, &b| (acc << 1) | ((address >> b) & 1) as usize)
    }

    pub fn bank_of(&self, address: u64) -> usize {
        ((address >> self.bank_bit) & 1) as usize
    }

    /// Address of the cache line containing `address`.
    pub fn line_of(&self, address: u64) -> u64 {
        address & !(self.line_size - 1)
    }

    /// Period of the mapping in bytes: one past the highest mapping bit.
    pub fn period(&self) -> u64 {
        let top = self
            .controller_bits
            .iter()
            .chain(std::iter::once(&self.bank_bit))
            .max()
            .copied()
            .unwrap_or(0);
        1 << (top + 1)
    }
}
