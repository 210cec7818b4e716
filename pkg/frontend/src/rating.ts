import type { AnnotationTransport } from './api.js'
import type { OfflineQueue } from './queue.js'
import type { Dimension, Progress, RatingView } from './types.js'
import type { Phase } from './pairwise.js'

export interface RatingState {
  phase: Phase
  item: RatingView | null
  progress: Progress
  /** 1-5, or null until the annotator picks — nothing is preselected. */
  selected: number | null
  pendingCount: number
  lastError: string | null
}

export class RatingSession {
  private current: RatingState = {
    phase: 'idle',
    item: null,
    progress: { labeled: 0, total: 0 },
    selected: null,
    pendingCount: 0,
    lastError: null,
  }

  constructor(
    private readonly api: AnnotationTransport,
    private readonly queue: OfflineQueue,
    readonly annotatorId: string,
    private readonly dimension?: Dimension,
    private readonly onChange?: (state: RatingState) => void,
  ) {}

  get state(): Readonly<RatingState> {
    return this.current
  }

  async start(): Promise<void> {
    this.update({ phase: 'loading', pendingCount: this.queue.size })
    if (this.queue.size > 0) {
      const result = await this.queue.flush((entry) => this.api.submitQueued(entry))
      this.update({ pendingCount: result.remaining })
      if (result.remaining > 0) {
        this.update({ phase: 'error', lastError: 'could not reach the service; unsent work is kept locally' })
        return
      }
    }
    await this.loadNext()
  }

  select(score: number): void {
    if (!Number.isInteger(score) || score < 1 || score > 5) {
      throw new RangeError(`rating must be an integer in [1, 5], got ${score}`)
    }
    this.update({ selected: score })
  }

  clearSelection(): void {
    this.update({ selected: null })
  }

  /**
   * Submit the selected score for the item on screen. Returns false without
   * touching the network when nothing is selected — a rating is never sent
   * unless the annotator actually picked one.
   */
  async submit(): Promise<boolean> {
    const { item, selected } = this.current
    if (item === null || selected === null) return false
    if (this.current.phase !== 'annotating' && this.current.phase !== 'error') return false
    this.queue.enqueueAnnotation({
      image_id: item.image_id,
      dimension: item.dimension,
      annotator_id: this.annotatorId,
      score: selected,
    })
    this.update({ phase: 'submitting', pendingCount: this.queue.size })
    await this.drainAndAdvance()
    return true
  }

  async retry(): Promise<void> {
    if (this.current.phase !== 'error') return
    this.update({ phase: 'submitting' })
    await this.drainAndAdvance()
  }

  private async drainAndAdvance(): Promise<void> {
    const result = await this.queue.flush((entry) => this.api.submitQueued(entry))
    this.update({ pendingCount: result.remaining })
    if (result.remaining > 0) {
      this.update({
        phase: 'error',
        lastError: 'submission not acknowledged yet; it is saved locally — retry when back online',
      })
      return
    }
    this.update({ lastError: null })
    await this.loadNext()
  }

  private async loadNext(): Promise<void> {
    this.update({ phase: 'loading', selected: null })
    let response
    try {
      response = await this.api.nextRating(this.annotatorId, this.dimension)
    } catch (err) {
      this.update({ phase: 'error', lastError: `could not fetch the next item: ${String(err)}` })
      return
    }
    if (response.item === null) {
      this.update({ phase: 'complete', item: null, progress: response.progress })
    } else {
      this.update({ phase: 'annotating', item: response.item, progress: response.progress })
    }
  }

  private update(patch: Partial<RatingState>): void {
    this.current = { ...this.current, ...patch }
    this.onChange?.(this.current)
  }
}
