import type { AnnotationTransport } from './api.js'
import type { OfflineQueue } from './queue.js'
import type { Choice, PairView, PreferenceLabel, Progress, Slot } from './types.js'

export type Phase = 'idle' | 'loading' | 'annotating' | 'submitting' | 'error' | 'complete'

export interface PairwiseState {
  phase: Phase
  pair: PairView | null
  progress: Progress
  /** Submissions written locally but not yet acknowledged by the service. */
  pendingCount: number
  lastError: string | null
}

/**
 * Map what the annotator clicked to the canonical stored label. The server
 * decides per pair+annotator which slot renders on the left; the label we
 * store must ignore that shuffle.
 */
export function canonicalLabel(choice: Choice, leftSlot: Slot): PreferenceLabel {
  if (choice === 'tie') return 'Tie'
  const slot = choice === 'left' ? leftSlot : other(leftSlot)
  return slot === 'a' ? 'A' : 'B'
}

function other(slot: Slot): Slot {
  return slot === 'a' ? 'b' : 'a'
}

/** Screen-side image URLs for a pair, honoring the server's left/right assignment. */
export function displayUrls(pair: PairView): { left: string; right: string } {
  return pair.left === 'a'
    ? { left: pair.image_a_url, right: pair.image_b_url }
    : { left: pair.image_b_url, right: pair.image_a_url }
}

export class PairwiseSession {
  private current: PairwiseState = {
    phase: 'idle',
    pair: null,
    progress: { labeled: 0, total: 0 },
    pendingCount: 0,
    lastError: null,
  }

  constructor(
    private readonly api: AnnotationTransport,
    private readonly queue: OfflineQueue,
    readonly annotatorId: string,
    private readonly onChange?: (state: PairwiseState) => void,
  ) {}

  get state(): Readonly<PairwiseState> {
    return this.current
  }

  /** Drain anything a previous visit left behind, then fetch the first pair. */
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

  /**
   * Record a decision for the pair on screen. The submission is persisted
   * locally before any network talk, so a failure can only delay it, never
   * drop it; the pair stays on screen until the service acknowledges.
   */
  async choose(choice: Choice): Promise<void> {
    const pair = this.current.pair
    if (pair === null || (this.current.phase !== 'annotating' && this.current.phase !== 'error')) {
      return
    }
    const label = canonicalLabel(choice, pair.left)
    this.queue.enqueuePreference({
      pair_id: pair.pair_id,
      annotator_id: this.annotatorId,
      label,
    })
    this.update({ phase: 'submitting', pendingCount: this.queue.size })
    await this.drainAndAdvance()
  }

  /** Re-attempt delivery after a failure (the retry banner's action). */
  async retry(): Promise<void> {
    if (this.current.phase !== 'error') return
    this.update({ phase: 'submitting' })
    await this.drainAndAdvance()
  }

  /**
   * Keyboard entry point: A = left better, B = right better, T = tie.
   * Returns the recorded choice, or null when the key does nothing.
   */
  handleKey(key: string): Choice | null {
    if (this.current.phase !== 'annotating') return null
    const choice = KEY_CHOICES[key.toLowerCase()]
    if (choice === undefined) return null
    void this.choose(choice)
    return choice
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
    this.update({ phase: 'loading' })
    let response
    try {
      response = await this.api.nextPair(this.annotatorId)
    } catch (err) {
      this.update({ phase: 'error', lastError: `could not fetch the next pair: ${String(err)}` })
      return
    }
    if (response.pair === null) {
      this.update({ phase: 'complete', pair: null, progress: response.progress })
    } else {
      this.update({ phase: 'annotating', pair: response.pair, progress: response.progress })
    }
  }

  private update(patch: Partial<PairwiseState>): void {
    this.current = { ...this.current, ...patch }
    this.onChange?.(this.current)
  }
}

const KEY_CHOICES: Record<string, Choice> = {
  a: 'left',
  b: 'right',
  t: 'tie',
}
