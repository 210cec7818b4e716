import type { AnnotationPayload, PreferencePayload } from './types.js'

// Unsent submissions persist in browser storage so a dropped connection or a
// page reload never loses a decision. One entry per logical submission key:
// re-deciding the same item before delivery replaces the stale intent, so a
// later flush delivers each decision exactly once.

export interface StorageLike {
  getItem(key: string): string | null
  setItem(key: string, value: string): void
  removeItem(key: string): void
}

export type QueuedSubmission =
  | { key: string; kind: 'preference'; payload: PreferencePayload; queued_at: number }
  | { key: string; kind: 'annotation'; payload: AnnotationPayload; queued_at: number }

export function preferenceKey(pairId: string, annotatorId: string): string {
  return `preference:${pairId}:${annotatorId}`
}

export function annotationKey(imageId: string, dimension: string, annotatorId: string): string {
  return `annotation:${imageId}:${dimension}:${annotatorId}`
}

export interface FlushResult {
  sent: number
  remaining: number
}

export class OfflineQueue {
  constructor(
    private readonly storage: StorageLike,
    private readonly storageKey = 'mosaiq.pending.v1',
  ) {}

  pending(): QueuedSubmission[] {
    const raw = this.storage.getItem(this.storageKey)
    if (raw === null) return []
    try {
      const parsed = JSON.parse(raw) as QueuedSubmission[]
      return Array.isArray(parsed) ? parsed : []
    } catch {
      return [] // corrupted storage: start clean rather than crash the page
    }
  }

  get size(): number {
    return this.pending().length
  }

  enqueuePreference(payload: PreferencePayload): string {
    const key = preferenceKey(payload.pair_id, payload.annotator_id)
    this.put({ key, kind: 'preference', payload, queued_at: Date.now() })
    return key
  }

  enqueueAnnotation(payload: AnnotationPayload): string {
    const key = annotationKey(payload.image_id, payload.dimension, payload.annotator_id)
    this.put({ key, kind: 'annotation', payload, queued_at: Date.now() })
    return key
  }

  /**
   * Deliver queued submissions in order. Each entry is removed only after the
   * sender resolves; the first failure stops the flush and keeps everything
   * not yet acknowledged.
   */
  async flush(send: (entry: QueuedSubmission) => Promise<void>): Promise<FlushResult> {
    let entries = this.pending()
    let sent = 0
    while (entries.length > 0) {
      const head = entries[0]!
      try {
        await send(head)
      } catch {
        break
      }
      entries = entries.slice(1)
      this.save(entries)
      sent += 1
    }
    return { sent, remaining: entries.length }
  }

  clear(): void {
    this.storage.removeItem(this.storageKey)
  }

  private put(entry: QueuedSubmission): void {
    const entries = this.pending().filter((e) => e.key !== entry.key)
    entries.push(entry)
    this.save(entries)
  }

  private save(entries: QueuedSubmission[]): void {
    if (entries.length === 0) {
      this.storage.removeItem(this.storageKey)
    } else {
      this.storage.setItem(this.storageKey, JSON.stringify(entries))
    }
  }
}
