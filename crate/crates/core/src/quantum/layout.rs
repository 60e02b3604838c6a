use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered list of named registers; the tensor index of register `i` is digit
/// `i`, leftmost most significant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Register>", into = "Vec<Register>")]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl TryFrom<Vec<Register>> for RegisterLayout {
    type Error = Error;

    fn try_from(registers: Vec<Register>) -> Result<Self> {
        Self::new(registers.into_iter().map(|r| (r.name, r.dim)))
    }
}

impl From<RegisterLayout> for Vec<Register> {
    fn from(layout: RegisterLayout) -> Self {
        layout.registers
    }
}

impl RegisterLayout {
    pub fn new<I, S>(registers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut out: Vec<Register> = Vec::new();
        for (name, dim) in registers {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::Register("register names must be nonempty".into()));
            }
            if dim < 2 {
                return Err(Error::Register(format!(
                    "register {name} has dimension {dim} < 2"
                )));
            }
            if out.iter().any(|r| r.name == name) {
                return Err(Error::Register(format!("duplicate register name {name}")));
            }
            out.push(Register { name, dim });
        }
        Ok(Self { registers: out })
    }

    /// Layout of `count`-qubit registers, one per name.
    pub fn qubits(regs: &[(&str, usize)]) -> Result<Self> {
        Self::new(regs.iter().map(|&(name, q)| (name, 1usize << q)))
    }

    /// The layout with no registers; its operators are scalars.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::Register(format!("unknown register {name:?}")))
    }

    pub fn dim(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].dim)
    }

    /// Number of qubits in a register whose dimension is a power of two.
    pub fn qubit_count(&self, name: &str) -> Result<usize> {
        let dim = self.dim(name)?;
        if dim.is_power_of_two() {
            Ok(dim.trailing_zeros() as usize)
        } else {
            Err(Error::Register(format!(
                "register {name} has dimension {dim}, not a qubit power"
            )))
        }
    }

    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        Self::new(
            self.registers
                .iter()
                .chain(&other.registers)
                .map(|r| (r.name.clone(), r.dim)),
        )
    }

    /// Sub-layout with the named registers in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let regs = names
            .iter()
            .map(|n| self.position(n).map(|p| self.registers[p].clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(regs.into_iter().map(|r| (r.name, r.dim)))
    }

    /// Names not in `names`, in layout order.
    pub fn complement(&self, names: &[&str]) -> Vec<String> {
        self.registers
            .iter()
            .filter(|r| !names.contains(&r.name.as_str()))
            .map(|r| r.name.clone())
            .collect()
    }

    /// Product of the dimensions of the named registers.
    pub fn dim_of(&self, names: &[&str]) -> Result<usize> {
        names.iter().map(|n| self.dim(n)).product()
    }

    /// Splits a basis index into per-register digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (slot, reg) in out.iter_mut().zip(&self.registers).rev() {
            *slot = index % reg.dim;
            index /= reg.dim;
        }
        out
    }

    /// For each basis index of `self`, its index once the registers are
    /// reordered into `order` (given as positions into `self`).
    pub(crate) fn permutation(&self, order: &[usize]) -> Vec<usize> {
        let dims = self.dims();
        (0..self.total_dim())
            .map(|i| {
                let d = self.digits(i);
                order.iter().fold(0, |acc, &p| acc * dims[p] + d[p])
            })
            .collect()
    }
}
