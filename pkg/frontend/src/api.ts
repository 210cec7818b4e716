import type { QueuedSubmission } from './queue.js'
import type {
  AnnotationAck,
  AnnotationPayload,
  Dimension,
  FitParams,
  FitResponse,
  HealthResponse,
  PairsNextResponse,
  PreferenceAck,
  PreferencePayload,
  RatingsNextResponse,
} from './types.js'

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
    readonly detail: unknown = null,
  ) {
    super(message)
    this.name = 'ApiError'
  }
}

/** The slice of the client the annotation sessions actually use; tests fake this. */
export interface AnnotationTransport {
  nextPair(annotator: string, includeScores?: boolean): Promise<PairsNextResponse>
  nextRating(annotator: string, dimension?: Dimension): Promise<RatingsNextResponse>
  submitQueued(entry: QueuedSubmission): Promise<void>
}

export interface ApiClientOptions {
  baseUrl: string
  /** Sent as `Authorization: Bearer <token>` when set. Writes require it on locked-down services. */
  authToken?: string
  /** Extra attempts after the first, for network errors and 5xx only. */
  maxRetries?: number
  retryDelayMs?: number
  /** Injection point for tests; defaults to global fetch. */
  fetchFn?: typeof fetch
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms))
}

export class ApiClient {
  private readonly baseUrl: string
  private readonly authToken: string | null
  private readonly maxRetries: number
  private readonly retryDelayMs: number
  private readonly fetchFn: typeof fetch

  constructor(options: ApiClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, '')
    this.authToken = options.authToken ?? null
    this.maxRetries = options.maxRetries ?? 2
    this.retryDelayMs = options.retryDelayMs ?? 300
    this.fetchFn = options.fetchFn ?? fetch
  }

  async health(): Promise<HealthResponse> {
    return this.request<HealthResponse>('GET', '/v1/health')
  }

  async nextPair(annotator: string, includeScores = false): Promise<PairsNextResponse> {
    const params = new URLSearchParams({ annotator })
    if (includeScores) params.set('include_scores', 'true')
    return this.request<PairsNextResponse>('GET', `/v1/pairs/next?${params}`)
  }

  async submitPreference(payload: PreferencePayload): Promise<PreferenceAck> {
    return this.request<PreferenceAck>('POST', '/v1/preferences', payload)
  }

  async nextRating(annotator: string, dimension?: Dimension): Promise<RatingsNextResponse> {
    const params = new URLSearchParams({ annotator })
    if (dimension) params.set('dimension', dimension)
    return this.request<RatingsNextResponse>('GET', `/v1/ratings/next?${params}`)
  }

  async submitAnnotation(payload: AnnotationPayload): Promise<AnnotationAck> {
    return this.request<AnnotationAck>('POST', '/v1/annotations', payload)
  }

  async fitWeights(params: FitParams = {}): Promise<FitResponse> {
    return this.request<FitResponse>('POST', '/v1/fusion/fit', params)
  }

  /** Deliver one offline-queue entry to whichever endpoint it belongs to. */
  async submitQueued(entry: QueuedSubmission): Promise<void> {
    if (entry.kind === 'preference') {
      await this.submitPreference(entry.payload)
    } else {
      await this.submitAnnotation(entry.payload)
    }
  }

  private async request<T>(method: 'GET' | 'POST', path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {}
    if (body !== undefined) headers['Content-Type'] = 'application/json'
    if (this.authToken !== null) headers['Authorization'] = `Bearer ${this.authToken}`
    const init: RequestInit = { method, headers }
    if (body !== undefined) init.body = JSON.stringify(body)

    let lastError: unknown = null
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      if (attempt > 0 && this.retryDelayMs > 0) await sleep(this.retryDelayMs * attempt)
      let response: Response
      try {
        response = await this.fetchFn(`${this.baseUrl}${path}`, init)
      } catch (err) {
        lastError = err // network-level failure: worth retrying
        continue
      }
      if (response.ok) {
        return (await response.json()) as T
      }
      const detail = await readDetail(response)
      const error = new ApiError(
        `${method} ${path} failed with ${response.status}: ${formatDetail(detail)}`,
        response.status,
        detail,
      )
      if (response.status >= 500) {
        lastError = error
        continue
      }
      throw error // 4xx is a caller problem; retrying cannot fix it
    }
    if (lastError instanceof ApiError) throw lastError
    throw new ApiError(`${method} ${path} failed: ${String(lastError)}`, null, lastError)
  }
}

async function readDetail(response: Response): Promise<unknown> {
  try {
    const parsed = (await response.json()) as { detail?: unknown }
    return parsed && typeof parsed === 'object' && 'detail' in parsed ? parsed.detail : parsed
  } catch {
    return null
  }
}

function formatDetail(detail: unknown): string {
  if (detail === null || detail === undefined) return 'no detail'
  return typeof detail === 'string' ? detail : JSON.stringify(detail)
}
