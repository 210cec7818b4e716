import { ApiClient } from './api.js'
import { OfflineQueue } from './queue.js'
import { PairwiseSession, displayUrls, type PairwiseState } from './pairwise.js'
import { RatingSession, type RatingState } from './rating.js'
import { DIMENSIONS, type Dimension } from './types.js'

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (node === null) throw new Error(`missing element #${id}`)
  return node as T
}

const params = new URLSearchParams(location.search)
const annotator = (params.get('annotator') ?? '').trim()
const mode = params.get('mode') === 'ratings' ? 'ratings' : 'pairs'
const rawDimension = params.get('dimension')
const dimension = DIMENSIONS.includes(rawDimension as Dimension)
  ? (rawDimension as Dimension)
  : undefined

const banner = byId<HTMLDivElement>('banner')
const bannerText = byId<HTMLSpanElement>('banner-text')
const progressText = byId<HTMLSpanElement>('progress')
const complete = byId<HTMLDivElement>('complete')

function showBanner(message: string | null): void {
  banner.style.display = message === null ? 'none' : 'block'
  if (message !== null) bannerText.textContent = message
}

function showProgress(labeled: number, total: number): void {
  progressText.textContent = `${labeled} / ${total} labeled`
}

if (annotator === '') {
  byId('setup').hidden = false
} else {
  byId<HTMLSpanElement>('who').textContent = annotator
  const api = new ApiClient({
    baseUrl: params.get('api') ?? location.origin,
    authToken: params.get('token') ?? undefined,
  })
  const queue = new OfflineQueue(localStorage)
  if (mode === 'pairs') {
    runPairs(api, queue)
  } else {
    runRatings(api, queue)
  }
}

function runPairs(api: ApiClient, queue: OfflineQueue): void {
  const panel = byId<HTMLElement>('pair-panel')
  const leftImage = byId<HTMLImageElement>('left-image')
  const rightImage = byId<HTMLImageElement>('right-image')

  const session = new PairwiseSession(api, queue, annotator, (state: PairwiseState) => {
    showProgress(state.progress.labeled, state.progress.total)
    showBanner(state.phase === 'error' ? state.lastError : null)
    if (state.phase === 'complete') {
      panel.hidden = true
      complete.style.display = 'block'
      complete.textContent = `All done — ${state.progress.labeled} pairs labeled. Thank you!`
      return
    }
    if (state.pair !== null) {
      panel.hidden = false
      const urls = displayUrls(state.pair)
      leftImage.src = urls.left
      rightImage.src = urls.right
    }
  })

  byId<HTMLButtonElement>('btn-left').onclick = () => void session.choose('left')
  byId<HTMLButtonElement>('btn-right').onclick = () => void session.choose('right')
  byId<HTMLButtonElement>('btn-tie').onclick = () => void session.choose('tie')
  byId<HTMLButtonElement>('btn-retry').onclick = () => void session.retry()
  document.addEventListener('keydown', (event) => {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) return
    session.handleKey(event.key)
  })
  void session.start()
}

function runRatings(api: ApiClient, queue: OfflineQueue): void {
  const panel = byId<HTMLElement>('rating-panel')
  const image = byId<HTMLImageElement>('rating-image')
  const guideline = byId<HTMLDivElement>('guideline')
  const scale = byId<HTMLDivElement>('scale')
  const note = byId<HTMLParagraphElement>('submit-note')

  const session = new RatingSession(api, queue, annotator, dimension, (state: RatingState) => {
    showProgress(state.progress.labeled, state.progress.total)
    showBanner(state.phase === 'error' ? state.lastError : null)
    if (state.phase === 'complete') {
      panel.hidden = true
      complete.style.display = 'block'
      complete.textContent = `All done — ${state.progress.labeled} ratings recorded. Thank you!`
      return
    }
    if (state.item !== null) {
      panel.hidden = false
      image.src = state.item.image_url
      guideline.textContent = state.item.guideline_text
      for (const button of scale.querySelectorAll('button')) {
        button.setAttribute('aria-pressed', String(Number(button.dataset.score) === state.selected))
      }
      if (state.selected !== null) note.textContent = ''
    }
  })

  for (let score = 1; score <= 5; score++) {
    const button = document.createElement('button')
    button.textContent = String(score)
    button.dataset.score = String(score)
    button.onclick = () => session.select(score)
    scale.appendChild(button)
  }

  byId<HTMLButtonElement>('btn-submit').onclick = () => {
    void session.submit().then((submitted) => {
      note.textContent = submitted ? '' : 'Pick a score from 1 to 5 first.'
    })
  }
  byId<HTMLButtonElement>('btn-retry').onclick = () => void session.retry()
  document.addEventListener('keydown', (event) => {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) return
    if (/^[1-5]$/.test(event.key) && session.state.phase === 'annotating') {
      session.select(Number(event.key))
    } else if (event.key === 'Enter') {
      void session.submit().then((submitted) => {
        note.textContent = submitted ? '' : 'Pick a score from 1 to 5 first.'
      })
    }
  })
  void session.start()
}
