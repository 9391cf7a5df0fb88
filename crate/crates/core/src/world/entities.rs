//! Entity records and the agent action vocabulary.

/// Grid cell coordinate. Valid cells satisfy `x < width && y < height`.
pub type Cell = (u32, u32);

/// The nine discrete actions, in Q-network output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Action {
    Forward = 0,
    Backward = 1,
    Left = 2,
    Right = 3,
    RotateLeft = 4,
    RotateRight = 5,
    StandStill = 6,
    JoinGroup = 7,
    LeaveGroup = 8,
}

pub const ACTION_COUNT: usize = 9;

impl Action {
    pub fn from_index(index: usize) -> Option<Action> {
        use Action::*;
        Some(match index {
            0 => Forward,
            1 => Backward,
            2 => Left,
            3 => Right,
            4 => RotateLeft,
            5 => RotateRight,
            6 => StandStill,
            7 => JoinGroup,
            8 => LeaveGroup,
            _ => return None,
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Movement actions are settled by `settle_move`, grouping actions by
    /// `settle_grouping`.
    pub fn is_grouping(self) -> bool {
        matches!(self, Action::JoinGroup | Action::LeaveGroup)
    }
}

/// Cardinal facing of a predator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Orientation {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Orientation {
    pub fn from_index(index: u8) -> Option<Orientation> {
        use Orientation::*;
        Some(match index {
            0 => North,
            1 => East,
            2 => South,
            3 => West,
            _ => return None,
        })
    }

    /// Unit step in the facing direction; north is +y, east is +x.
    pub fn ahead(self) -> (i64, i64) {
        match self {
            Orientation::North => (0, 1),
            Orientation::East => (1, 0),
            Orientation::South => (0, -1),
            Orientation::West => (-1, 0),
        }
    }

    /// 90 degrees counterclockwise: N -> W -> S -> E -> N.
    pub fn rotated_left(self) -> Orientation {
        match self {
            Orientation::North => Orientation::West,
            Orientation::West => Orientation::South,
            Orientation::South => Orientation::East,
            Orientation::East => Orientation::North,
        }
    }

    /// 90 degrees clockwise: N -> E -> S -> W -> N.
    pub fn rotated_right(self) -> Orientation {
        match self {
            Orientation::North => Orientation::East,
            Orientation::East => Orientation::South,
            Orientation::South => Orientation::West,
            Orientation::West => Orientation::North,
        }
    }
}

/// Prey species. `Group` prey need a hunting unit meeting the capture
/// threshold; `Solo` prey fall to a single predator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Species {
    Group = 0,
    Solo = 1,
}

impl Species {
    pub fn other(self) -> Species {
        match self {
            Species::Group => Species::Solo,
            Species::Solo => Species::Group,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Species::Group => "group",
            Species::Solo => "solo",
        }
    }
}

/// Number of entries in a predator's identity embedding.
pub const IDENTITY_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Predator {
    pub id: u64,
    pub pos: Cell,
    pub orientation: Orientation,
    pub health: f32,
    pub group_id: Option<u64>,
    pub identity: [f32; IDENTITY_LEN],
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prey {
    pub id: u64,
    pub species: Species,
    pub pos: Cell,
    pub capture_radius: u32,
    pub capture_threshold: u32,
    pub reward: f64,
    pub alive: bool,
}

/// Hunting group; `members` is kept sorted by id and never drops below
/// two entries after settlement.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub group_id: u64,
    pub members: Vec<u64>,
}

/// Outcome of one prey capture: every member of the winning unit gets
/// `share`, and the shares sum to the prey's reward.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureEvent {
    pub prey_id: u64,
    pub winner_members: Vec<u64>,
    pub share: f64,
}
