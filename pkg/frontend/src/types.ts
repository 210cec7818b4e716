// Wire types for the /v1 annotation endpoints. These mirror the JSON the
// service actually sends; nothing here is invented client-side.

export const DIMENSIONS = ['layout', 'harmony', 'lighting', 'distortion'] as const
export type Dimension = (typeof DIMENSIONS)[number]

/** Canonical stored label: always relative to slots a/b, never to screen sides. */
export type PreferenceLabel = 'A' | 'B' | 'Tie'

/** Which canonical slot the server asked us to render on the left. */
export type Slot = 'a' | 'b'

/** What the annotator physically clicked. */
export type Choice = 'left' | 'right' | 'tie'

export interface Progress {
  labeled: number
  total: number
}

export interface PairView {
  pair_id: string
  image_a_url: string
  image_b_url: string
  left: Slot
  scores_a?: number[] | null
  scores_b?: number[] | null
}

export interface PairsNextResponse {
  progress: Progress
  pair: PairView | null
}

export interface RatingView {
  image_id: string
  image_url: string
  dimension: Dimension
  guideline_text: string
}

export interface RatingsNextResponse {
  progress: Progress
  item: RatingView | null
}

export interface PreferencePayload {
  pair_id: string
  annotator_id: string
  label: PreferenceLabel
}

export interface PreferenceAck {
  pair_id: string
  annotator_id: string
  label: PreferenceLabel
  resubmission: boolean
}

export interface AnnotationPayload {
  image_id: string
  dimension: Dimension
  annotator_id: string
  score: number
  batch_id?: string
}

export interface AnnotationAck {
  image_id: string
  dimension: string
  annotator_id: string
  score: number
  resubmission: boolean
}

export interface FitParams {
  tie_mode?: 'soft_half' | 'drop'
  l2?: number
  max_iters?: number
  grad_tol?: number
}

export interface FitResponse {
  w: number[]
  normalized_view: number[] | null
  meta: {
    pair_count_used: number
    final_loss: number
    tie_mode: string
    iterations: number
    converged: boolean
  }
}

export interface HealthResponse {
  status: string
  pairs_total: number
  rating_items_total: number
  weights_loaded: boolean
}
