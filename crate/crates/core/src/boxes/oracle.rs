use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use super::{BaBox, BoxBody};
use crate::engine::Cx;
use crate::types::{PartyId, Round, Value};

/// Inputs posted to an ideal agreement functionality during one run.
pub type Board = Arc<Mutex<BTreeMap<PartyId, Value>>>;

pub fn new_board() -> Board {
    Arc::new(Mutex::new(BTreeMap::new()))
}

/// Ideal agreement stub: every party posts its input in its start round and
/// one round later all read the same board and output its plurality value
/// (smallest among ties). Sends nothing, so it costs no bytes.
#[derive(Debug)]
pub struct OracleBox {
    start: Round,
    input: Value,
    board: Board,
    output: Option<Value>,
}

impl OracleBox {
    pub const ROUNDS: Round = 2;

    pub fn new(start: Round, input: Value, board: Board) -> Self {
        OracleBox { start, input, board, output: None }
    }
}

impl BaBox for OracleBox {
    fn on_round(&mut self, cx: &mut Cx<'_, BoxBody>, _inbox: &[(PartyId, BoxBody)]) {
        let local = cx.round.saturating_sub(self.start);
        let mut board = self.board.lock().expect("board lock");
        if local == 0 {
            board.entry(cx.me).or_insert(self.input);
        } else if self.output.is_none() {
            let mut tally: BTreeMap<Value, usize> = BTreeMap::new();
            for v in board.values() {
                *tally.entry(*v).or_default() += 1;
            }
            let best = tally.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(v, _)| *v);
            self.output = best;
        }
    }

    fn output(&self) -> Option<Value> {
        self.output
    }
}
