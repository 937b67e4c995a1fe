/// Function table as published, read column by column. Repeats are
/// intentional: the registry keeps the first occurrence of each id.
pub(crate) const FUNCTION_TABLE: [&str; 114] = [
    "identity",
    "rotl1",
    "reverse_bits",
    "flip_bits",
    "swap_halves",
    "majority",
    "minority",
    "parity_fill",
    "alternating_start_one",
    "alternating_start_zero",
    "left_half",
    "right_half",
    "double_rotl",
    "rotr1",
    "double_rotr",
    "ones_if_palindrome",
    "mirror_half",
    "spread_first_bit",
    "spread_last_bit",
    "invert_prefix",
    "invert_suffix",
    "meta_constant",
    "shift_left_zero",
    "shift_right_zero",
    "swap_pairs",
    "keep_even_positions",
    "keep_odd_positions",
    "edge_mask",
    "center_mask",
    "xor_with_s0",
    "flip_bits->reverse_bits",
    "rotl1->reverse_bits",
    "reverse_bits->rotl1",
    "rotl1->flip_bits",
    "swap_halves->reverse_bits",
    "swap_halves->flip_bits",
    "double_rotl->flip_bits",
    "rotr1->flip_bits",
    "spread_last_bit",
    "invert_prefix",
    "invert_suffix",
    "meta_constant",
    "flip_bits->reverse_bits",
    "rotl1->reverse_bits",
    "reverse_bits->rotl1",
    "rotl1->flip_bits",
    "swap_halves->reverse_bits",
    "swap_halves->flip_bits",
    "double_rotl->flip_bits",
    "rotr1->flip_bits",
    "spread_first_bit->flip_bits",
    "spread_last_bit->flip_bits",
    "left_half->flip_bits",
    "right_half->flip_bits",
    "flip_bits->left_half",
    "flip_bits->right_half",
    "double_rotl->reverse_bits",
    "rotl1->swap_halves",
    "xor_with_s0",
    "flip_bits->xor_with_s0",
    "ones_if_palindrome->flip_bits",
    "flip_bits->mirror_half",
    "invert_prefix->reverse_bits",
    "left_half->reverse_bits",
    "right_half->reverse_bits",
    "parity_fill->flip_bits",
    "rotl1->spread_first_bit",
    "shift_left_zero->flip_bits",
    "shift_right_zero->flip_bits",
    "flip_bits->shift_left_zero",
    "flip_bits->shift_right_zero",
    "swap_pairs->flip_bits",
    "shift_left_zero->reverse_bits",
    "shift_right_zero->reverse_bits",
    "spread_first_bit->flip_bits",
    "shift_left_zero->edge_mask",
    "swap_halves->shift_left_zero",
    "swap_halves->shift_right_zero",
    "shift_left_zero->swap_halves",
    "shift_right_zero->swap_halves",
    "keep_even_positions->flip_bits",
    "keep_odd_positions->flip_bits",
    "flip_bits->keep_even_positions",
    "flip_bits->keep_odd_positions",
    "edge_mask->flip_bits",
    "center_mask->flip_bits",
    "shift_left_zero->keep_even_positions",
    "shift_left_zero->keep_odd_positions",
    "shift_right_zero->keep_even_positions",
    "shift_right_zero->keep_odd_positions",
    "keep_even_positions->reverse_bits",
    "keep_odd_positions->reverse_bits",
    "shift_left_zero->parity_fill",
    "shift_right_zero->parity_fill",
    "parity_fill->shift_left_zero",
    "parity_fill->shift_right_zero",
    "spread_first_bit->shift_left_zero",
    "spread_last_bit->shift_right_zero",
    "spread_first_bit->keep_even_positions",
    "spread_last_bit->keep_odd_positions",
    "spread_first_bit->edge_mask",
    "spread_last_bit->edge_mask",
    "spread_first_bit->center_mask",
    "spread_last_bit->center_mask",
    "rotl1->shift_left_zero",
    "rotl1->shift_right_zero",
    "shift_left_zero->rotl1",
    "shift_right_zero->rotl1",
    "reverse_bits->edge_mask",
    "reverse_bits->center_mask",
    "edge_mask->shift_left_zero",
    "edge_mask->shift_right_zero",
    "shift_left_zero->shift_left_zero",
    "shift_left_zero->swap_pairs",
];

/// Published BitLoad of every registry function at length 8.
pub const REFERENCE_BITLOADS: [(&str, u32); 100] = [
    ("identity", 8),
    ("rotl1", 8),
    ("reverse_bits", 8),
    ("flip_bits", 8),
    ("swap_halves", 8),
    ("majority", 8),
    ("minority", 8),
    ("parity_fill", 8),
    ("alternating_start_one", 8),
    ("alternating_start_zero", 8),
    ("left_half", 4),
    ("right_half", 4),
    ("double_rotl", 8),
    ("rotr1", 8),
    ("double_rotr", 8),
    ("ones_if_palindrome", 8),
    ("mirror_half", 4),
    ("spread_first_bit", 1),
    ("spread_last_bit", 1),
    ("invert_prefix", 8),
    ("invert_suffix", 8),
    ("meta_constant", 0),
    ("flip_bits->reverse_bits", 8),
    ("rotl1->reverse_bits", 8),
    ("reverse_bits->rotl1", 8),
    ("rotl1->flip_bits", 8),
    ("swap_halves->reverse_bits", 8),
    ("swap_halves->flip_bits", 8),
    ("double_rotl->flip_bits", 8),
    ("rotr1->flip_bits", 8),
    ("spread_first_bit->flip_bits", 1),
    ("spread_last_bit->flip_bits", 1),
    ("left_half->flip_bits", 4),
    ("right_half->flip_bits", 4),
    ("flip_bits->left_half", 4),
    ("flip_bits->right_half", 4),
    ("double_rotl->reverse_bits", 8),
    ("rotl1->swap_halves", 8),
    ("xor_with_s0", 0),
    ("flip_bits->xor_with_s0", 0),
    ("ones_if_palindrome->flip_bits", 8),
    ("flip_bits->mirror_half", 4),
    ("invert_prefix->reverse_bits", 8),
    ("left_half->reverse_bits", 4),
    ("right_half->reverse_bits", 4),
    ("parity_fill->flip_bits", 8),
    ("rotl1->spread_first_bit", 1),
    ("shift_left_zero", 7),
    ("shift_right_zero", 7),
    ("swap_pairs", 8),
    ("keep_even_positions", 4),
    ("keep_odd_positions", 4),
    ("edge_mask", 2),
    ("center_mask", 6),
    ("shift_left_zero->flip_bits", 7),
    ("shift_right_zero->flip_bits", 7),
    ("flip_bits->shift_left_zero", 7),
    ("flip_bits->shift_right_zero", 7),
    ("swap_pairs->flip_bits", 8),
    ("shift_left_zero->reverse_bits", 7),
    ("shift_right_zero->reverse_bits", 7),
    ("swap_halves->shift_left_zero", 7),
    ("swap_halves->shift_right_zero", 7),
    ("shift_left_zero->swap_halves", 7),
    ("shift_right_zero->swap_halves", 7),
    ("keep_even_positions->flip_bits", 4),
    ("keep_odd_positions->flip_bits", 4),
    ("flip_bits->keep_even_positions", 4),
    ("flip_bits->keep_odd_positions", 4),
    ("edge_mask->flip_bits", 2),
    ("center_mask->flip_bits", 6),
    ("shift_left_zero->keep_even_positions", 4),
    ("shift_left_zero->keep_odd_positions", 3),
    ("shift_right_zero->keep_even_positions", 3),
    ("shift_right_zero->keep_odd_positions", 4),
    ("keep_even_positions->reverse_bits", 4),
    ("keep_odd_positions->reverse_bits", 4),
    ("shift_left_zero->parity_fill", 7),
    ("shift_right_zero->parity_fill", 7),
    ("parity_fill->shift_left_zero", 8),
    ("parity_fill->shift_right_zero", 8),
    ("spread_first_bit->shift_left_zero", 1),
    ("spread_last_bit->shift_right_zero", 1),
    ("spread_first_bit->keep_even_positions", 1),
    ("spread_last_bit->keep_odd_positions", 1),
    ("spread_first_bit->edge_mask", 1),
    ("spread_last_bit->edge_mask", 1),
    ("spread_first_bit->center_mask", 1),
    ("spread_last_bit->center_mask", 1),
    ("rotl1->shift_left_zero", 7),
    ("rotl1->shift_right_zero", 7),
    ("shift_left_zero->rotl1", 7),
    ("shift_right_zero->rotl1", 7),
    ("reverse_bits->edge_mask", 2),
    ("reverse_bits->center_mask", 6),
    ("edge_mask->shift_left_zero", 1),
    ("edge_mask->shift_right_zero", 1),
    ("shift_left_zero->shift_left_zero", 6),
    ("shift_left_zero->swap_pairs", 7),
    ("shift_left_zero->edge_mask", 1),
];
